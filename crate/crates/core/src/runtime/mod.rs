//! Step-wise execution of synthesized shields.
//!
//! A [`ShieldExecution`] is the pure step function: controller state plus
//! SSE-monitor state. A [`ShieldInstance`] wraps it with a current state and
//! counters for online use.

mod export;

pub use export::{read_controller, write_controller, ControllerFile};

use crate::automata::{Dfa, StateId};
use crate::error::{Error, Result};
use crate::prop::VarSet;
use crate::shield::{hdc_vars, ShieldInterface, ShieldResult};
use crate::synthesis::{Controller, IoPartition};

/// Joint state: (controller state, SSE monitor state).
pub type ExecState = (StateId, StateId);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutput {
    /// Letter index over the shield outputs `O'`.
    pub output: usize,
    /// Full letter over `I ∪ O ∪ O'`.
    pub letter: usize,
    pub deviation: bool,
    pub sse_ok: bool,
}

#[derive(Clone, Debug)]
pub struct ShieldExecution {
    pub interface: ShieldInterface,
    pub controller: Controller,
    pub sse_monitor: Dfa,
    deviation: Vec<bool>,
}

impl ShieldExecution {
    pub fn new(interface: ShieldInterface, controller: Controller, sse_monitor: Dfa) -> Result<Self> {
        let vars = interface.ambient()?;
        if controller.io() != &interface.io()? {
            return Err(Error::AlphabetMismatch("controller does not match the shield interface".into()));
        }
        if sse_monitor.vars() != &vars {
            return Err(Error::AlphabetMismatch(format!(
                "SSE monitor over [{}], expected [{}]",
                sse_monitor.vars(),
                vars
            )));
        }
        let deviation = interface.deviation_prop().truth_table(&vars)?;
        Ok(ShieldExecution {
            interface,
            controller,
            sse_monitor,
            deviation,
        })
    }

    pub fn from_result(r: &ShieldResult) -> Result<Self> {
        ShieldExecution::new(r.interface.clone(), r.controller.clone(), r.sse_monitor.clone())
    }

    pub fn io(&self) -> &IoPartition {
        self.controller.io()
    }

    pub fn vars(&self) -> &VarSet {
        self.io().vars()
    }

    /// `I ∪ O ∪ O' ∪ {SSEOK, Deviation}`; see [`ShieldExecution::extended_letter`].
    pub fn extended_vars(&self) -> VarSet {
        self.vars().union(&hdc_vars())
    }

    /// Index of `letter` extended with the two derived bits, which are the
    /// least significant positions of [`ShieldExecution::extended_vars`].
    pub fn extended_letter(&self, s: &StepOutput) -> usize {
        (s.letter << 2) | ((s.sse_ok as usize) << 1) | s.deviation as usize
    }

    pub fn init(&self) -> ExecState {
        (self.controller.init(), self.sse_monitor.init())
    }

    /// `input` indexes letters over `I ∪ O` in partition order.
    #[inline]
    pub fn step(&self, (c, m): ExecState, input: usize) -> (ExecState, StepOutput) {
        let (output, c2) = self.controller.step(c, input);
        let letter = self.io().join(input, output);
        let m2 = self.sse_monitor.next(m, letter);
        let out = StepOutput {
            output,
            letter,
            deviation: self.deviation[letter],
            sse_ok: self.sse_monitor.is_accepting(m2),
        };
        ((c2, m2), out)
    }

    /// The shield together with its derived bits as one minimal automaton
    /// over [`ShieldExecution::extended_vars`]: a letter is accepted iff its
    /// `O'` part is the controller's output and its `SSEOK`/`Deviation` bits
    /// are the derived ones. Includes the reject sink.
    pub fn monitored_dfa(&self, max_states: usize) -> Result<Dfa> {
        let dfa = Dfa::explore(
            &self.extended_vars(),
            Some(self.init()),
            |s, l| {
                let (i, o) = self.io().split(l >> 2);
                let (t, out) = self.step((*s)?, i);
                (out.output == o && self.extended_letter(&out) == l).then_some(t)
            },
            Option::is_some,
            max_states,
        )?;
        Ok(dfa.minimize())
    }

    /// Reachable joint states in BFS order.
    pub fn reachable(&self) -> Vec<ExecState> {
        let mut seen = std::collections::HashSet::new();
        let mut order = vec![self.init()];
        seen.insert(self.init());
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for input in 0..self.io().num_inputs() {
                let (t, _) = self.step(s, input);
                if seen.insert(t) {
                    order.push(t);
                }
            }
            i += 1;
        }
        order
    }
}

/// One online shield.
#[derive(Clone, Debug)]
pub struct ShieldInstance {
    exec: ShieldExecution,
    state: ExecState,
    steps: u64,
    deviations: u64,
}

impl ShieldInstance {
    pub fn new(exec: ShieldExecution) -> Self {
        let state = exec.init();
        ShieldInstance {
            exec,
            state,
            steps: 0,
            deviations: 0,
        }
    }

    pub fn execution(&self) -> &ShieldExecution {
        &self.exec
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn deviations(&self) -> u64 {
        self.deviations
    }

    pub fn state(&self) -> ExecState {
        self.state
    }

    /// Feeds one `I ∪ O` letter (index in partition order).
    pub fn step(&mut self, input: usize) -> Result<StepOutput> {
        if input >= self.exec.io().num_inputs() {
            return Err(Error::AlphabetMismatch(format!("input letter {input} out of range")));
        }
        let (next, out) = self.exec.step(self.state, input);
        if next.0 == self.exec.controller.supervisor().reject() {
            return Err(Error::Integrity(format!("controller rejected its own output in state {}", self.state.0)));
        }
        self.state = next;
        self.steps += 1;
        self.deviations += out.deviation as u64;
        Ok(out)
    }

    /// Feeds one letter given as bits for `I` then `O`.
    pub fn step_bits(&mut self, bits: &[bool]) -> Result<StepOutput> {
        let n = self.exec.interface.inputs.len() + self.exec.interface.sse_outputs.len();
        if bits.len() != n {
            return Err(Error::AlphabetMismatch(format!("expected {n} bits, got {}", bits.len())));
        }
        self.step(bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize))
    }

    pub fn reset(&mut self) {
        self.state = self.exec.init();
        self.steps = 0;
        self.deviations = 0;
    }

    /// One line of the pipe protocol: `I` then `O` bits in, `O'` bits plus
    /// `dev` and `ok` flags out, all space-separated 0/1.
    pub fn step_line(&mut self, line: &str) -> Result<String> {
        let bits = line
            .split_whitespace()
            .map(|t| match t {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::format("input line", format!("`{other}` is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let out = self.step_bits(&bits)?;
        let io = self.exec.io();
        let mut parts: Vec<&str> = (0..self.exec.interface.shield_outputs.len())
            .map(|k| if io.output_bit(out.output, k) { "1" } else { "0" })
            .collect();
        parts.push(if out.deviation { "1" } else { "0" });
        parts.push(if out.sse_ok { "1" } else { "0" });
        Ok(parts.join(" "))
    }
}

#[cfg(test)]
mod tests;
