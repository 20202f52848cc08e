//! The `shieldc` command line.
//!
//! Exit codes: 0 ok, 2 unrealizable, 3 specification or usage error,
//! 4 capacity exceeded.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, build_dtmc, expected_value, NON_DEVIATION};
use crate::automata::{compile_with, CompileOptions};
use crate::error::{Error, Result};
use crate::prop::VarSet;
use crate::qddc::{builtin_macros, evaluate_prefixes, parse_with, Trace};
use crate::runtime::{read_controller, write_controller, ShieldExecution, ShieldInstance};
use crate::shield::{parse_spec, synthesize, ShieldOutcome, ShieldSpec, SpecFile};
use crate::synthesis::{Arith, OutputOrder};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNREALIZABLE: i32 = 2;
pub const EXIT_SPEC: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "shieldc", version, about = "Synthesize and analyse run-time enforcement shields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile a formula to a minimal automaton (writes NAME.dfa and NAME.dot).
    Compile {
        #[command(flatten)]
        target: FormulaArgs,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Synthesize a shield (writes shield.ctl, shield.dot and stats.txt).
    Synth {
        spec: PathBuf,
        #[command(flatten)]
        flags: SynthFlags,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Expected non-deviation and burst latency of a shield.
    Analyze {
        spec: PathBuf,
        /// Analyse this exported controller instead of synthesizing.
        #[arg(long)]
        controller: Option<PathBuf>,
        #[command(flatten)]
        flags: SynthFlags,
        /// Also write the DTMC in MRMC format to --out.
        #[arg(long)]
        mrmc: bool,
        /// Check that every exported row sums to 1.
        #[arg(long)]
        validate: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte-Carlo run under uniform random inputs.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[command(flatten)]
        flags: SynthFlags,
        #[arg(long, default_value_t = 1_000_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print every step as `input output dev ok`.
        #[arg(long)]
        trace: bool,
    },
    /// Write the DTMC of a property (default: non-deviation) as .tra/.lab.
    ExportMrmc {
        spec: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[command(flatten)]
        flags: SynthFlags,
        /// Name of a `formula` entry in the spec.
        #[arg(long)]
        formula: Option<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the truth value of a formula on every prefix of a trace.
    Run {
        #[command(flatten)]
        target: FormulaArgs,
        /// One letter per line as space-separated 0/1 bits; `-` for stdin.
        #[arg(long, default_value = "-")]
        trace: PathBuf,
    },
    /// Enforce an exported controller on a stream of `I` `O` bit lines.
    Enforce { controller: PathBuf },
}

#[derive(Args, Debug)]
pub struct FormulaArgs {
    /// Spec file providing variables and macros.
    pub spec: Option<PathBuf>,
    /// `req`, `req_shield`, `hdc`, or a `formula` entry of the spec.
    #[arg(long)]
    pub formula: Option<String>,
    /// Formula text instead of a named formula.
    #[arg(long)]
    pub expr: Option<String>,
    /// Variables for --expr without a spec, e.g. "p q".
    #[arg(long)]
    pub vars: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct SynthFlags {
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub no_dm: bool,
    /// Output order such as "!q' !p'".
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub max_states: Option<usize>,
    /// Floating-point value iteration and steady-state solving.
    #[arg(long)]
    pub float: bool,
}

impl SynthFlags {
    fn arith(&self) -> Arith {
        if self.float {
            Arith::Float
        } else {
            Arith::Exact
        }
    }

    fn apply(&self, file: &SpecFile) -> Result<ShieldSpec> {
        let mut file = file.clone();
        if let Some(o) = &self.order {
            file.order = Some(OutputOrder::parse(o)?);
        }
        let mut spec = file.to_spec()?;
        if let Some(h) = self.horizon {
            spec.horizon = h;
        }
        if self.no_dm {
            spec.dm = false;
        }
        if let Some(m) = self.max_states {
            if m == 0 {
                return Err(Error::InvalidParameter("--max-states must be positive".into()));
            }
            spec.max_states = m;
        }
        spec.arith = self.arith();
        Ok(spec)
    }
}

enum Failure {
    Error(Error),
    Unrealizable(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, input: &mut dyn BufRead) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SPEC } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command, out, input) {
        Ok(()) => EXIT_OK,
        Err(Failure::Unrealizable(msg)) => {
            eprintln!("{msg}");
            let _ = writeln!(out, "unrealizable");
            EXIT_UNREALIZABLE
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Capacity(_) => EXIT_CAPACITY,
                _ => EXIT_SPEC,
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    fs::write(&p, text)?;
    Ok(p)
}

fn load_spec(path: &Path) -> Result<SpecFile> {
    parse_spec(&read(path)?)
}

/// Either reads the exported controller (re-deriving the SSE monitor from
/// the spec) or synthesizes one.
fn execution(
    file: &SpecFile,
    controller: Option<&Path>,
    flags: &SynthFlags,
) -> std::result::Result<(ShieldExecution, Option<f64>), Failure> {
    match controller {
        Some(p) => {
            let c = read_controller(&read(p)?)?;
            if c.interface != file.interface {
                return Err(Error::AlphabetMismatch("controller interface differs from the spec".into()).into());
            }
            let opts = CompileOptions {
                max_states: flags.max_states.unwrap_or(CompileOptions::default().max_states),
            };
            let monitor = compile_with(&file.req, &file.interface.ambient()?, &opts)?;
            Ok((ShieldExecution::new(c.interface, c.controller, monitor)?, None))
        }
        None => {
            let spec = flags.apply(file)?;
            match synthesize(&spec)? {
                ShieldOutcome::Shield(r) => Ok((ShieldExecution::from_result(&r)?, Some(r.stats.seconds))),
                ShieldOutcome::Unrealizable(u) => Err(Failure::Unrealizable(u.to_string())),
            }
        }
    }
}

fn formula_target(t: &FormulaArgs) -> Result<(String, crate::qddc::Qddc, VarSet)> {
    let file = t.spec.as_deref().map(load_spec).transpose()?;
    match (&t.formula, &t.expr) {
        (Some(name), None) => {
            let file = file.ok_or_else(|| Error::InvalidParameter("--formula needs a spec file".into()))?;
            let (f, vars) = file.formula(name)?;
            Ok((name.clone(), f, vars))
        }
        (None, Some(text)) => match (file, &t.vars) {
            (_, Some(v)) => {
                let vars = VarSet::new(v.split_whitespace())?;
                Ok(("expr".into(), parse_with(text, &vars, &builtin_macros())?, vars))
            }
            (Some(file), None) => Ok(("expr".into(), file.parse_formula(text)?, file.extended_vars()?)),
            (None, None) => Err(Error::InvalidParameter("--expr needs a spec file or --vars".into())),
        },
        _ => Err(Error::InvalidParameter("give exactly one of --formula and --expr".into())),
    }
}

fn parse_bits(line: &str, width: usize) -> Result<usize> {
    let bits: Vec<&str> = line.split_whitespace().collect();
    if bits.len() != width {
        return Err(Error::format("trace", format!("expected {width} bits, got `{line}`")));
    }
    bits.iter().try_fold(0usize, |acc, b| match *b {
        "0" => Ok(acc << 1),
        "1" => Ok(acc << 1 | 1),
        other => Err(Error::format("trace", format!("`{other}` is not a bit"))),
    })
}

fn execute(cmd: Command, out: &mut dyn Write, input: &mut dyn BufRead) -> CmdResult {
    match cmd {
        Command::Compile {
            target,
            max_states,
            out: dir,
        } => {
            let (name, f, vars) = formula_target(&target)?;
            let opts = CompileOptions {
                max_states: max_states.unwrap_or(CompileOptions::default().max_states),
            };
            let start = Instant::now();
            let dfa = compile_with(&f, &vars, &opts)?;
            let secs = start.elapsed().as_secs_f64();
            write_file(&dir, &format!("{name}.dfa"), &dfa.to_text())?;
            write_file(&dir, &format!("{name}.dot"), &dfa.to_dot(&name))?;
            writeln!(out, "states: {}", dfa.num_states()).map_err(Error::from)?;
            writeln!(out, "time: {secs:.3}s").map_err(Error::from)?;
        }
        Command::Synth { spec, flags, out: dir } => {
            let file = load_spec(&spec)?;
            let s = flags.apply(&file)?;
            let r = match synthesize(&s)? {
                ShieldOutcome::Shield(r) => r,
                ShieldOutcome::Unrealizable(u) => return Err(Failure::Unrealizable(u.to_string())),
            };
            let st = &r.stats;
            let mut stats = String::new();
            stats.push_str(&format!("hshield_states={}\n", st.hshield_states));
            stats.push_str(&format!("mps_states={}\n", st.mps_states));
            if let Some(m) = st.mphos_states {
                stats.push_str(&format!("mphos_states={m}\n"));
            }
            stats.push_str(&format!("controller_states={}\n", st.controller_states));
            stats.push_str(&format!("synthesis_seconds={:.3}\n", st.seconds));
            let ctl = write_controller(&r.interface, &r.controller, Some(&r.sse_monitor));
            write_file(&dir, "shield.ctl", &ctl)?;
            write_file(&dir, "shield.dot", &r.controller.supervisor().dfa().to_dot("shield"))?;
            write_file(&dir, "stats.txt", &stats)?;
            out.write_all(stats.as_bytes()).map_err(Error::from)?;
        }
        Command::Analyze {
            spec,
            controller,
            flags,
            mrmc,
            validate,
            out: dir,
        } => {
            let file = load_spec(&spec)?;
            let (exec, synth_secs) = execution(&file, controller.as_deref(), &flags)?;
            let report = analysis::analyze(&exec, flags.arith())?;
            if let Some(s) = synth_secs {
                writeln!(out, "synthesis_seconds={s:.3}").map_err(Error::from)?;
            }
            out.write_all(report.to_kv().as_bytes()).map_err(Error::from)?;
            if mrmc || validate {
                let m = build_dtmc(&exec, &analysis::property(&exec, NON_DEVIATION)?)?;
                let (tra, lab) = m.to_mrmc();
                if validate {
                    validate_tra(&tra)?;
                    writeln!(out, "tra_rows_valid=true").map_err(Error::from)?;
                }
                if mrmc {
                    write_file(&dir, "shield.tra", &tra)?;
                    write_file(&dir, "shield.lab", &lab)?;
                }
            }
        }
        Command::Simulate {
            spec,
            controller,
            flags,
            steps,
            seed,
            trace,
        } => {
            let file = load_spec(&spec)?;
            let (exec, _) = execution(&file, controller.as_deref(), &flags)?;
            let start = Instant::now();
            let mut io_err = None;
            let stats = analysis::simulate_with(&exec, steps, seed, |s| {
                if trace && io_err.is_none() {
                    let r = writeln!(
                        out,
                        "{} {} {} {}",
                        s.input, s.out.output, s.out.deviation as u8, s.out.sse_ok as u8
                    );
                    io_err = r.err();
                }
            })?;
            if let Some(e) = io_err {
                return Err(Error::from(e).into());
            }
            writeln!(out, "steps={}", stats.steps).map_err(Error::from)?;
            writeln!(out, "deviations={}", stats.deviations).map_err(Error::from)?;
            writeln!(out, "non_deviation_frequency={:.7}", stats.non_deviation()).map_err(Error::from)?;
            writeln!(out, "sse_ok_frequency={:.7}", stats.sse_ok_frequency()).map_err(Error::from)?;
            writeln!(out, "std_error={:.7}", stats.std_error).map_err(Error::from)?;
            writeln!(out, "simulation_seconds={:.3}", start.elapsed().as_secs_f64()).map_err(Error::from)?;
        }
        Command::ExportMrmc {
            spec,
            controller,
            flags,
            formula,
            out: dir,
        } => {
            let file = load_spec(&spec)?;
            let (exec, _) = execution(&file, controller.as_deref(), &flags)?;
            let d = match &formula {
                Some(name) => file.formula(name)?.0,
                None => analysis::property(&exec, NON_DEVIATION)?,
            };
            let m = build_dtmc(&exec, &d)?;
            let (tra, lab) = m.to_mrmc();
            let name = formula.as_deref().unwrap_or("shield");
            write_file(&dir, &format!("{name}.tra"), &tra)?;
            write_file(&dir, &format!("{name}.lab"), &lab)?;
            let ev = expected_value(&m, flags.arith())?;
            writeln!(out, "states={}", m.num_states()).map_err(Error::from)?;
            writeln!(out, "transitions={}", m.num_transitions()).map_err(Error::from)?;
            writeln!(out, "expected_value={ev}").map_err(Error::from)?;
        }
        Command::Run { target, trace } => {
            let (_, f, vars) = formula_target(&target)?;
            let text = if trace.as_os_str() == "-" {
                let mut s = String::new();
                input.read_to_string(&mut s).map_err(Error::from)?;
                s
            } else {
                read(&trace)?
            };
            let letters = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(|l| parse_bits(l, vars.len()))
                .collect::<Result<Vec<_>>>()?;
            if letters.is_empty() {
                return Err(Error::format("trace", "empty trace").into());
            }
            let by_eval = evaluate_prefixes(&f, &Trace::new(vars.clone(), letters.clone())?)?;
            let dfa = compile_with(&f, &vars, &CompileOptions::default())?;
            let by_dfa = dfa.prefix_acceptance(&letters);
            if by_eval != by_dfa {
                return Err(Error::Integrity("monitor disagrees with the reference evaluator".into()).into());
            }
            let row: Vec<&str> = by_dfa.iter().map(|&b| if b { "1" } else { "0" }).collect();
            writeln!(out, "{}", row.join(" ")).map_err(Error::from)?;
        }
        Command::Enforce { controller } => {
            let exec = read_controller(&read(&controller)?)?.into_execution()?;
            let mut inst = ShieldInstance::new(exec);
            for line in input.lines() {
                let line = line.map_err(Error::from)?;
                if line.trim().is_empty() {
                    continue;
                }
                let reply = inst.step_line(&line)?;
                writeln!(out, "{reply}").map_err(Error::from)?;
            }
        }
    }
    Ok(())
}

fn validate_tra(tra: &str) -> Result<()> {
    use num::{BigRational, One, Zero};
    let mut lines = tra.lines();
    let n: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("STATES "))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::format("tra", "missing STATES"))?;
    lines.next();
    let mut sums = vec![BigRational::zero(); n + 1];
    for l in lines {
        let p: Vec<&str> = l.split(' ').collect();
        let (Some(s), Some(prob)) = (p.first().and_then(|s| s.parse::<usize>().ok()), p.get(2)) else {
            return Err(Error::format("tra", format!("bad row `{l}`")));
        };
        sums[s] += decimal(prob).ok_or_else(|| Error::format("tra", format!("bad probability `{prob}`")))?;
    }
    match sums[1..].iter().position(|x| !x.is_one()) {
        Some(s) => Err(Error::format("tra", format!("row {} does not sum to 1", s + 1))),
        None => Ok(()),
    }
}

fn decimal(s: &str) -> Option<num::BigRational> {
    use num::{BigInt, BigRational};
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    Some(BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32)))
}

#[cfg(test)]
mod tests;
