//! Plain-text controller tables.
//!
//! ```text
//! vars: r p q p' q'
//! inputs: r
//! sse_outputs: p q
//! shield_outputs: p' q'
//! states: 2
//! init: 0
//! 0 0 -> 0 1
//! ...
//! monitor:
//! vars: r p q p' q'
//! ...
//! ```
//!
//! Table lines are `state input -> output next` with letter indices over
//! `I ∪ O` and `O'` (first variable most significant). Every (state, input)
//! pair must appear exactly once. The optional `monitor:` section holds the
//! SSE monitor in [`Dfa::to_text`] format.

use std::fmt::Write as _;

use crate::automata::{read_dfa, Dfa};
use crate::error::{Error, Result};
use crate::shield::ShieldInterface;
use crate::synthesis::{Controller, Supervisor};

use super::ShieldExecution;

#[derive(Clone, Debug)]
pub struct ControllerFile {
    pub interface: ShieldInterface,
    pub controller: Controller,
    pub monitor: Option<Dfa>,
}

impl ControllerFile {
    pub fn into_execution(self) -> Result<ShieldExecution> {
        let monitor = self
            .monitor
            .ok_or_else(|| Error::format("controller", "no `monitor:` section; SSEOK cannot be derived"))?;
        ShieldExecution::new(self.interface, self.controller, monitor)
    }
}

pub fn write_controller(iface: &ShieldInterface, c: &Controller, monitor: Option<&Dfa>) -> String {
    let io = c.io();
    let states = c.states();
    let index = |q: usize| states.iter().position(|&s| s == q).expect("live state");
    let mut s = String::new();
    let _ = writeln!(s, "vars: {}", io.vars());
    let _ = writeln!(s, "inputs: {}", iface.inputs.join(" "));
    let _ = writeln!(s, "sse_outputs: {}", iface.sse_outputs.join(" "));
    let _ = writeln!(s, "shield_outputs: {}", iface.shield_outputs.join(" "));
    let _ = writeln!(s, "states: {}", states.len());
    let _ = writeln!(s, "init: {}", index(c.init()));
    for (k, &q) in states.iter().enumerate() {
        for i in 0..io.num_inputs() {
            let (o, t) = c.step(q, i);
            let _ = writeln!(s, "{k} {i} -> {o} {}", index(t));
        }
    }
    if let Some(m) = monitor {
        s.push_str("monitor:\n");
        s.push_str(&m.to_text());
    }
    s
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::format("controller", format!("line {line}: {}", msg.into()))
}

fn letter(tok: &str, size: usize, line: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if v < size => Ok(v),
        _ => Err(err(line, format!("`{tok}` is not a letter index below {size}"))),
    }
}

pub fn read_controller(text: &str) -> Result<ControllerFile> {
    let (table, monitor) = match text.find("\nmonitor:") {
        Some(at) => (&text[..at], Some(&text[at + "\nmonitor:".len()..])),
        None => (text, None),
    };
    let mut lines = table
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut header = |key: &str| -> Result<String> {
        let (no, l) = lines
            .next()
            .ok_or_else(|| Error::format("controller", format!("missing `{key}:` line")))?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(':'))
            .map(|r| r.trim().to_string())
            .ok_or_else(|| err(no, format!("expected `{key}:`")))
    };
    let vars_line = header("vars")?;
    let names = |s: String| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let inputs = names(header("inputs")?);
    let sse = names(header("sse_outputs")?);
    let shield = names(header("shield_outputs")?);
    let n: usize = header("states")?
        .parse()
        .map_err(|_| Error::format("controller", "bad state count"))?;
    let init: usize = header("init")?
        .parse()
        .map_err(|_| Error::format("controller", "bad initial state"))?;
    let iface = ShieldInterface::new(&inputs, &sse, &shield)?;
    let io = iface.io()?;
    if io.vars().names().join(" ") != vars_line.split_whitespace().collect::<Vec<_>>().join(" ") {
        return Err(Error::format("controller", "`vars:` disagrees with the interface"));
    }
    if n == 0 || init >= n {
        return Err(Error::format("controller", "initial state out of range"));
    }
    let ni = io.num_inputs();
    let mut table: Vec<Option<(usize, usize)>> = vec![None; n * ni];
    for (no, l) in lines {
        let parts: Vec<&str> = l.split_whitespace().collect();
        let [q, i, "->", o, t] = parts.as_slice() else {
            return Err(err(no, "expected `state input -> output next`"));
        };
        let q: usize = q.parse().map_err(|_| err(no, "bad state"))?;
        let t: usize = t.parse().map_err(|_| err(no, "bad successor"))?;
        if q >= n || t >= n {
            return Err(err(no, "state out of range"));
        }
        let i = letter(i, ni, no)?;
        let o = letter(o, io.num_outputs(), no)?;
        if table[q * ni + i].replace((o, t)).is_some() {
            return Err(Error::Integrity(format!("line {no}: duplicate entry for state {q}")));
        }
    }
    if let Some(gap) = table.iter().position(Option::is_none) {
        return Err(Error::Integrity(format!(
            "no entry for state {} input {}",
            gap / ni,
            gap % ni
        )));
    }
    // Rebuild the single-output supervisor: state n is the reject sink.
    let k = io.vars().alphabet_size();
    let mut delta = vec![n as u32; (n + 1) * k];
    for q in 0..n {
        for i in 0..ni {
            let (o, t) = table[q * ni + i].expect("checked");
            delta[q * k + io.join(i, o)] = t as u32;
        }
    }
    let mut acc = vec![true; n];
    acc.push(false);
    let dfa = Dfa::from_parts(io.vars().clone(), init, acc, delta)?;
    let controller = Controller::from_supervisor(Supervisor::from_dfa(dfa, io.clone())?)?;
    let monitor = match monitor {
        Some(m) => {
            let d = read_dfa(m)?;
            if d.vars() != io.vars() {
                return Err(Error::AlphabetMismatch("monitor alphabet differs from the controller's".into()));
            }
            Some(d)
        }
        None => None,
    };
    Ok(ControllerFile {
        interface: iface,
        controller,
        monitor,
    })
}
