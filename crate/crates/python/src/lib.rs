//! Python bindings: formula compilation, shield synthesis, analysis and
//! online enforcement.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use shield_core::analysis::{self, LatencyResult};
use shield_core::automata::{self, Dfa};
use shield_core::prop::VarSet;
use shield_core::qddc::{self, Trace};
use shield_core::runtime::{self, ShieldExecution};
use shield_core::shield::{self as sh, ShieldOutcome, SpecFile};
use shield_core::synthesis::{Arith, OutputOrder};
use shield_core::Error;

create_exception!(shield_py, ShieldError, PyException);
create_exception!(shield_py, CapacityError, ShieldError);
create_exception!(shield_py, Unrealizable, ShieldError);

fn err(e: Error) -> PyErr {
    match e {
        Error::Capacity(_) => CapacityError::new_err(e.to_string()),
        other => ShieldError::new_err(other.to_string()),
    }
}

fn vars_of(names: Vec<String>) -> PyResult<VarSet> {
    VarSet::new(names).map_err(err)
}

/// `steps` holds one 0/1 row per time point, one column per variable.
fn trace_of(vars: &VarSet, steps: &[Vec<u8>]) -> PyResult<Trace> {
    if let Some(s) = steps.iter().find(|s| s.len() != vars.len()) {
        return Err(PyValueError::new_err(format!("expected {} columns, got {}", vars.len(), s.len())));
    }
    let cols: Vec<Vec<u8>> = (0..vars.len()).map(|v| steps.iter().map(|s| s[v]).collect()).collect();
    let cols: Vec<&[u8]> = cols.iter().map(Vec::as_slice).collect();
    Trace::from_rows(vars.clone(), &cols).map_err(err)
}

/// Minimal DFA of a formula.
#[pyclass(module = "shield_py")]
struct Automaton {
    dfa: Dfa,
}

#[pymethods]
impl Automaton {
    #[getter]
    fn num_states(&self) -> usize {
        self.dfa.num_states()
    }

    #[getter]
    fn vars(&self) -> Vec<String> {
        self.dfa.vars().names().to_vec()
    }

    /// `rows` is a non-empty list of 0/1 rows, one column per variable.
    fn accepts(&self, rows: Vec<Vec<u8>>) -> PyResult<bool> {
        self.dfa.accepts(&trace_of(self.dfa.vars(), &rows)?).map_err(err)
    }

    fn equivalent(&self, other: &Automaton) -> PyResult<bool> {
        self.dfa.equivalent(&other.dfa).map_err(err)
    }

    fn to_text(&self) -> String {
        self.dfa.to_text()
    }

    #[pyo3(signature = (name = "A"))]
    fn to_dot(&self, name: &str) -> String {
        self.dfa.to_dot(name)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Automaton> {
        Ok(Automaton {
            dfa: automata::read_dfa(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Automaton(states={}, vars=[{}])", self.dfa.num_states(), self.dfa.vars())
    }
}

#[pyfunction]
fn compile(formula: &str, vars: Vec<String>) -> PyResult<Automaton> {
    let vars = vars_of(vars)?;
    let d = qddc::parse(formula, &vars).map_err(err)?;
    Ok(Automaton {
        dfa: automata::compile(&d, &vars).map_err(err)?,
    })
}

/// Truth of the formula on every prefix of the trace.
#[pyfunction]
fn evaluate_prefixes(formula: &str, vars: Vec<String>, rows: Vec<Vec<u8>>) -> PyResult<Vec<bool>> {
    let vars = vars_of(vars)?;
    let d = qddc::parse(formula, &vars).map_err(err)?;
    qddc::evaluate_prefixes(&d, &trace_of(&vars, &rows)?).map_err(err)
}

fn latency_py(py: Python<'_>, l: LatencyResult) -> PyResult<Py<PyAny>> {
    Ok(match l {
        LatencyResult::Finite(n) => n.into_pyobject(py)?.into_any().unbind(),
        LatencyResult::Infinite => f64::INFINITY.into_pyobject(py)?.into_any().unbind(),
        LatencyResult::Undefined => py.None(),
    })
}

/// A synthesized shield together with its spec file.
#[pyclass(module = "shield_py")]
struct Shield {
    file: SpecFile,
    exec: ShieldExecution,
    seconds: f64,
}

#[pymethods]
impl Shield {
    /// Synthesizes from spec-file text. Keyword overrides mirror the CLI.
    #[staticmethod]
    #[pyo3(signature = (spec, dm = None, horizon = None, order = None))]
    fn synthesize(spec: &str, dm: Option<bool>, horizon: Option<usize>, order: Option<&str>) -> PyResult<Shield> {
        let mut file = sh::parse_spec(spec).map_err(err)?;
        if let Some(d) = dm {
            file.dm = d;
        }
        if let Some(h) = horizon {
            file.horizon = h;
        }
        if let Some(o) = order {
            file.order = Some(OutputOrder::parse(o).map_err(err)?);
        }
        let s = file.to_spec().map_err(err)?;
        match sh::synthesize(&s).map_err(err)? {
            ShieldOutcome::Shield(r) => Ok(Shield {
                exec: ShieldExecution::from_result(&r).map_err(err)?,
                seconds: r.stats.seconds,
                file,
            }),
            ShieldOutcome::Unrealizable(u) => Err(Unrealizable::new_err(u.to_string())),
        }
    }

    #[getter]
    fn controller_states(&self) -> usize {
        self.exec.controller.num_states()
    }

    #[getter]
    fn synthesis_seconds(&self) -> f64 {
        self.seconds
    }

    /// Formula names declared in the spec file.
    #[getter]
    fn formulas(&self) -> Vec<String> {
        self.file.formulas.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Long-run expected value of a formula (a name from the spec file or
    /// formula text over the extended alphabet).
    #[pyo3(signature = (formula, exact = true))]
    fn expected_value(&self, formula: &str, exact: bool) -> PyResult<f64> {
        let d = self.formula(formula)?;
        let m = analysis::build_dtmc(&self.exec, &d).map_err(err)?;
        let arith = if exact { Arith::Exact } else { Arith::Float };
        Ok(analysis::expected_value(&m, arith).map_err(err)?.value)
    }

    /// Longest interval satisfying the formula: an int, `inf`, or `None`.
    fn maxlen(&self, py: Python<'_>, formula: &str) -> PyResult<Py<PyAny>> {
        let d = self.formula(formula)?;
        latency_py(py, analysis::maxlen(&self.exec, &d).map_err(err)?)
    }

    /// The default report as a dict.
    #[pyo3(signature = (exact = true))]
    fn analyze<'py>(&self, py: Python<'py>, exact: bool) -> PyResult<Bound<'py, PyDict>> {
        let arith = if exact { Arith::Exact } else { Arith::Float };
        let r = analysis::analyze(&self.exec, arith).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("controller_states", r.controller_states)?;
        d.set_item("monitored_states", r.monitored_states)?;
        d.set_item("dtmc_states", r.dtmc_states)?;
        d.set_item("lumped_states", r.lumped_states)?;
        d.set_item("expected_value", r.expected.value)?;
        d.set_item("expected_value_exact", r.expected.exact.as_ref().map(ToString::to_string))?;
        d.set_item("latency", latency_py(py, r.latency)?)?;
        d.set_item("burst_positions", r.latency.positions())?;
        d.set_item("seconds", r.seconds)?;
        Ok(d)
    }

    #[pyo3(signature = (steps, seed = 0))]
    fn simulate<'py>(&self, py: Python<'py>, steps: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let s = analysis::simulate(&self.exec, steps, seed).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("steps", s.steps)?;
        d.set_item("deviations", s.deviations)?;
        d.set_item("non_deviation", s.non_deviation())?;
        d.set_item("sse_ok_frequency", s.sse_ok_frequency())?;
        d.set_item("std_error", s.std_error)?;
        Ok(d)
    }

    /// Controller in the text exchange format, SSE monitor included.
    fn export(&self) -> String {
        runtime::write_controller(&self.exec.interface, &self.exec.controller, Some(&self.exec.sse_monitor))
    }

    fn instance(&self) -> ShieldInstance {
        ShieldInstance {
            inner: runtime::ShieldInstance::new(self.exec.clone()),
        }
    }
}

impl Shield {
    fn formula(&self, text: &str) -> PyResult<qddc::Qddc> {
        match self.file.formulas.iter().find(|(n, _)| n == text) {
            Some((_, d)) => Ok(d.clone()),
            None => self.file.parse_formula(text).map_err(err),
        }
    }
}

/// An online shield with its own state.
#[pyclass(module = "shield_py")]
struct ShieldInstance {
    inner: runtime::ShieldInstance,
}

#[pymethods]
impl ShieldInstance {
    /// Takes `I` then `O` bits; returns `(shield_outputs, deviation, sse_ok)`.
    fn step(&mut self, bits: Vec<bool>) -> PyResult<(Vec<bool>, bool, bool)> {
        let out = self.inner.step_bits(&bits).map_err(|e| match e {
            Error::AlphabetMismatch(m) => PyValueError::new_err(m),
            other => err(other),
        })?;
        let exec = self.inner.execution();
        let io = exec.io();
        let outs = (0..exec.interface.shield_outputs.len())
            .map(|k| io.output_bit(out.output, k))
            .collect();
        Ok((outs, out.deviation, out.sse_ok))
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    #[getter]
    fn steps(&self) -> u64 {
        self.inner.steps()
    }

    #[getter]
    fn deviations(&self) -> u64 {
        self.inner.deviations()
    }
}

#[pymodule]
fn shield_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Automaton>()?;
    m.add_class::<Shield>()?;
    m.add_class::<ShieldInstance>()?;
    m.add_function(wrap_pyfunction!(compile, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_prefixes, m)?)?;
    m.add("ShieldError", m.py().get_type::<ShieldError>())?;
    m.add("CapacityError", m.py().get_type::<CapacityError>())?;
    m.add("Unrealizable", m.py().get_type::<Unrealizable>())?;
    Ok(())
}
