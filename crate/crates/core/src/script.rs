//! Plain-text command scripts for offline episodes.
//!
//! One directive per line, `#` starts a comment:
//!
//! ```text
//! # optional; without it the episode ends once the last target is reached
//! duration 60
//!
//! # time_s  mode       four target values
//! 0.5       spherical  0.20  0.00  0.00  0.000
//! 3.0       cartesian  0.01 -0.02  0.00  0.300
//! ```
//!
//! Targets are offsets from the instrument state at the moment the mode was
//! entered:
//!
//! * `cartesian`: tip displacement x, y, z (m, base frame) and roll angle (rad);
//! * `spherical`: pitch angle, yaw angle, roll angle (rad) and insertion depth (m).
//!
//! Times must not decrease.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::solver::CommandMode;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptEntry {
    pub time: f64,
    pub mode: CommandMode,
    pub targets: [f64; 4],
    /// Source line (1-based), 0 for programmatically built entries.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommandScript {
    pub duration: Option<f64>,
    pub entries: Vec<ScriptEntry>,
}

impl CommandScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = Some(duration);
        self
    }

    /// Appends an entry; panics on decreasing time since that is a programming error.
    pub fn at(mut self, time: f64, mode: CommandMode, targets: [f64; 4]) -> Self {
        if let Some(last) = self.entries.last() {
            assert!(time >= last.time, "script times must not decrease");
        }
        self.entries.push(ScriptEntry { time, mode, targets, line: 0 });
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(d) = self.duration {
            writeln!(out, "duration {d}").unwrap();
        }
        for e in &self.entries {
            let [a, b, c, d] = e.targets;
            writeln!(out, "{} {} {a} {b} {c} {d}", e.time, e.mode.as_str()).unwrap();
        }
        out
    }
}

fn number(tok: &str, line: usize, what: &str) -> Result<f64, ScriptError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ScriptError { line, message: format!("{what} `{tok}` is not a finite number") }),
    }
}

impl FromStr for CommandScript {
    type Err = ScriptError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut script = CommandScript::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens[0] == "duration" {
                if tokens.len() != 2 {
                    return Err(ScriptError { line, message: "expected `duration <seconds>`".into() });
                }
                if script.duration.is_some() {
                    return Err(ScriptError { line, message: "duration given twice".into() });
                }
                let d = number(tokens[1], line, "duration")?;
                if d < 0.0 {
                    return Err(ScriptError { line, message: "duration must be non-negative".into() });
                }
                script.duration = Some(d);
                continue;
            }
            if tokens.len() != 6 {
                return Err(ScriptError {
                    line,
                    message: format!("expected `<time> <mode> <v0> <v1> <v2> <v3>`, found {} fields", tokens.len()),
                });
            }
            let time = number(tokens[0], line, "time")?;
            if time < 0.0 {
                return Err(ScriptError { line, message: "time must be non-negative".into() });
            }
            if let Some(prev) = script.entries.last() {
                if time < prev.time {
                    return Err(ScriptError {
                        line,
                        message: format!("time {time} is earlier than the previous command at {}", prev.time),
                    });
                }
            }
            let mode = match CommandMode::parse(tokens[1]) {
                Some(m @ (CommandMode::Cartesian | CommandMode::Spherical)) => m,
                _ => {
                    return Err(ScriptError {
                        line,
                        message: format!("unknown mode `{}` (cartesian or spherical)", tokens[1]),
                    })
                }
            };
            let mut targets = [0.0; 4];
            for (slot, tok) in targets.iter_mut().zip(&tokens[2..]) {
                *slot = number(tok, line, "target")?;
            }
            script.entries.push(ScriptEntry { time, mode, targets, line });
        }
        Ok(script)
    }
}
