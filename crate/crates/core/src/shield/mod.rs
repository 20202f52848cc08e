//! Shield specifications and the synthesis pipeline
//! `Det_ord(MPHOS(MPS(REQ(I,O') ∧ HDC ≪ INDDEF)))`.
//!
//! The shield reads the environment inputs `I` and the SSE outputs `O`, and
//! emits corrected outputs `O'`. Two derived signals drive the deviation
//! constraint: `SSEOK` (the SSE output so far satisfies REQ) and `Deviation`
//! (some `o_i` differs from `o'_i` at the current position).

mod spec_file;

use std::time::Instant;

pub use spec_file::{parse_spec, SpecFile};

use crate::automata::{compile_with, CompileOptions, Dfa};
use crate::error::{Error, Result};
use crate::prop::{PropFormula, VarSet};
use crate::qddc::{builtin_macros, cascade, parse_with, IndicatorDef, Qddc};
use crate::synthesis::{
    determinize, mphos, mps, Arith, Controller, IoPartition, MpsOutcome, OutputOrder, SoftSpec, Supervisor,
    Unrealizable,
};

pub const SSEOK: &str = "SSEOK";
pub const DEVIATION: &str = "Deviation";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShieldInterface {
    pub inputs: Vec<String>,
    pub sse_outputs: Vec<String>,
    /// `shield_outputs[k]` corrects `sse_outputs[k]`.
    pub shield_outputs: Vec<String>,
}

impl ShieldInterface {
    pub fn new<S: AsRef<str>>(inputs: &[S], sse_outputs: &[S], shield_outputs: &[S]) -> Result<Self> {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
        let iface = ShieldInterface {
            inputs: own(inputs),
            sse_outputs: own(sse_outputs),
            shield_outputs: own(shield_outputs),
        };
        if iface.sse_outputs.len() != iface.shield_outputs.len() {
            return Err(Error::InvalidParameter(format!(
                "{} SSE outputs but {} shield outputs",
                iface.sse_outputs.len(),
                iface.shield_outputs.len()
            )));
        }
        let all = iface.ambient()?;
        for reserved in [SSEOK, DEVIATION] {
            if all.contains(reserved) {
                return Err(Error::WitnessCollision(reserved.into()));
            }
        }
        Ok(iface)
    }

    /// `I ∪ O ∪ O'` in that order.
    pub fn ambient(&self) -> Result<VarSet> {
        let vars = VarSet::new(self.inputs.iter().chain(&self.sse_outputs).chain(&self.shield_outputs))?;
        vars.check_capacity()?;
        Ok(vars)
    }

    /// `I ∪ O`, the variables REQ is written over.
    pub fn sse_vars(&self) -> Result<VarSet> {
        VarSet::new(self.inputs.iter().chain(&self.sse_outputs))
    }

    /// Game partition: `I ∪ O` uncontrolled, `O'` controlled.
    pub fn io(&self) -> Result<IoPartition> {
        let ins: Vec<&str> = self.inputs.iter().chain(&self.sse_outputs).map(String::as_str).collect();
        let outs: Vec<&str> = self.shield_outputs.iter().map(String::as_str).collect();
        IoPartition::new(&self.ambient()?, &ins, &outs)
    }

    /// Ambient positions of each `(o, o')` pair.
    pub fn pair_positions(&self) -> Result<Vec<(usize, usize)>> {
        let vars = self.ambient()?;
        Ok(self
            .sse_outputs
            .iter()
            .zip(&self.shield_outputs)
            .map(|(o, p)| (vars.position(o).expect("ambient"), vars.position(p).expect("ambient")))
            .collect())
    }

    /// `REQ(I,O')`: capture-free renaming of each `o_i` to `o'_i`.
    pub fn primed(&self, req: &Qddc) -> Qddc {
        req.rename_free(&|v| {
            self.sse_outputs
                .iter()
                .position(|o| o == v)
                .map(|k| self.shield_outputs[k].clone())
        })
    }

    /// `⋁_i ¬(o_i ⇔ o'_i)`.
    pub fn deviation_prop(&self) -> PropFormula {
        PropFormula::any(
            self.sse_outputs
                .iter()
                .zip(&self.shield_outputs)
                .map(|(o, p)| PropFormula::var(o.as_str()).iff(PropFormula::var(p.as_str())).not()),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShieldType {
    /// No deviation constraint.
    V0,
    /// Deviations last fewer than `k` cycles.
    V1 { k: u64 },
    /// Deviations while the SSE is correct last fewer than `k` cycles, and
    /// no spurious deviation.
    V2 { k: u64 },
    /// At most `d` deviations in any window with at most `e` SSE errors, and
    /// no spurious deviation.
    V3 { e: u64, d: u64 },
    /// Any formula over `SSEOK` and `Deviation`.
    Custom(Qddc),
}

pub fn hdc_vars() -> VarSet {
    VarSet::new([SSEOK, DEVIATION]).expect("distinct")
}

/// The hard deviation constraint as a formula over `SSEOK` and `Deviation`.
pub fn hdc_formula(t: &ShieldType) -> Result<Qddc> {
    let text = match t {
        ShieldType::V0 => "true".to_string(),
        ShieldType::V1 { k } | ShieldType::V2 { k } if *k == 0 => {
            return Err(Error::InvalidParameter("k must be at least 1".into()))
        }
        ShieldType::V1 { k } => format!("[]([[Deviation]] => slen<{k})"),
        ShieldType::V2 { k } => format!("[]([[SSEOK && Deviation]] => slen<{k}) && NoSpuriousDeviation"),
        ShieldType::V3 { e, d } => {
            format!("[]((scount !SSEOK <= {e}) => (scount Deviation <= {d})) && NoSpuriousDeviation")
        }
        ShieldType::Custom(f) => {
            f.check_vars(&hdc_vars())?;
            return Ok(f.clone());
        }
    };
    parse_with(&text, &hdc_vars(), &builtin_macros())
}

/// A complete shield specification.
#[derive(Clone, Debug)]
pub struct ShieldSpec {
    pub interface: ShieldInterface,
    /// Over `I ∪ O`.
    pub req: Qddc,
    pub shield_type: ShieldType,
    pub dm: bool,
    pub horizon: usize,
    pub order: OutputOrder,
    pub arith: Arith,
    pub max_states: usize,
}

impl ShieldSpec {
    pub fn new(interface: ShieldInterface, req: Qddc, shield_type: ShieldType, order: OutputOrder) -> Result<Self> {
        req.check_vars(&interface.sse_vars()?)?;
        Ok(ShieldSpec {
            interface,
            req,
            shield_type,
            dm: true,
            horizon: 10,
            order,
            arith: Arith::Exact,
            max_states: CompileOptions::default().max_states,
        })
    }

    fn opts(&self) -> CompileOptions {
        CompileOptions {
            max_states: self.max_states,
        }
    }

    /// The cascade formula `REQ(I,O') && HDC << INDDEF` over
    /// `I ∪ O ∪ O' ∪ {SSEOK, Deviation}`.
    pub fn cascade_formula(&self) -> Result<Qddc> {
        let base = self.interface.ambient()?;
        let body = self.interface.primed(&self.req).and(hdc_formula(&self.shield_type)?);
        cascade(
            body,
            &[
                IndicatorDef::new(self.req.clone(), SSEOK),
                IndicatorDef::new(Qddc::at_end(self.interface.deviation_prop()), DEVIATION),
            ],
            &base,
        )
    }

    /// Monitor of `REQ(I,O)` over the ambient alphabet; accepting after a
    /// letter iff `SSEOK` holds there.
    pub fn sse_monitor(&self) -> Result<Dfa> {
        compile_with(&self.req, &self.interface.ambient()?, &self.opts())
    }
}

/// The hard shield automaton over `I ∪ O ∪ O'`, built as a product of the
/// `REQ(I,O')` automaton, the SSE monitor and the HDC automaton fed with the
/// derived bits.
pub fn build_hshield(spec: &ShieldSpec) -> Result<Dfa> {
    let vars = spec.interface.ambient()?;
    let opts = spec.opts();
    let req = compile_with(&spec.interface.primed(&spec.req), &vars, &opts)?;
    let sse = spec.sse_monitor()?;
    let hv = hdc_vars();
    let hdc = compile_with(&hdc_formula(&spec.shield_type)?, &hv, &opts)?;
    let dev = spec.interface.deviation_prop().truth_table(&vars)?;
    let dfa = Dfa::explore(
        &vars,
        (req.init(), sse.init(), hdc.init()),
        |&(a, m, h), l| {
            let m2 = sse.next(m, l);
            let bits = hv
                .letter_from_bits(&[sse.is_accepting(m2), dev[l]])
                .expect("two bits")
                .index();
            (req.next(a, l), m2, hdc.next(h, bits))
        },
        |&(a, _, h)| req.is_accepting(a) && hdc.is_accepting(h),
        spec.max_states,
    )?;
    Ok(dfa.normalize_init().minimize())
}

/// One `true^<o_i <=> o'_i> : 1` per pair; the weight of a letter is the
/// number of matching pairs.
pub fn hamming_soft(iface: &ShieldInterface) -> SoftSpec {
    SoftSpec::new(iface.sse_outputs.iter().zip(&iface.shield_outputs).map(|(o, p)| {
        (Qddc::at_end(PropFormula::var(o.as_str()).iff(PropFormula::var(p.as_str()))), 1)
    }))
}

#[derive(Clone, Debug, Default)]
pub struct ShieldStats {
    pub hshield_states: usize,
    pub mps_states: usize,
    pub mphos_states: Option<usize>,
    pub controller_states: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct ShieldResult {
    pub interface: ShieldInterface,
    pub controller: Controller,
    pub mps: Supervisor,
    pub mphos: Option<Supervisor>,
    /// `REQ(I,O)` monitor used to derive `SSEOK` at run time.
    pub sse_monitor: Dfa,
    pub stats: ShieldStats,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum ShieldOutcome {
    Shield(ShieldResult),
    Unrealizable(Unrealizable),
}

impl ShieldOutcome {
    pub fn shield(self) -> Option<ShieldResult> {
        match self {
            ShieldOutcome::Shield(s) => Some(s),
            ShieldOutcome::Unrealizable(_) => None,
        }
    }

    pub fn is_realizable(&self) -> bool {
        matches!(self, ShieldOutcome::Shield(_))
    }
}

pub fn synthesize(spec: &ShieldSpec) -> Result<ShieldOutcome> {
    let start = Instant::now();
    let io = spec.interface.io()?;
    let hard = build_hshield(spec)?;
    let sup = match mps(&hard, &io)? {
        MpsOutcome::Realizable(s) => s,
        MpsOutcome::Unrealizable(u) => return Ok(ShieldOutcome::Unrealizable(u)),
    };
    let pruned = if spec.dm {
        Some(mphos(&sup, &hamming_soft(&spec.interface), spec.horizon, spec.arith)?.supervisor)
    } else {
        None
    };
    let controller = determinize(pruned.as_ref().unwrap_or(&sup), &spec.order)?;
    let stats = ShieldStats {
        hshield_states: hard.num_states(),
        mps_states: sup.num_states(),
        mphos_states: pruned.as_ref().map(Supervisor::num_states),
        controller_states: controller.num_states(),
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(ShieldOutcome::Shield(ShieldResult {
        interface: spec.interface.clone(),
        controller,
        mps: sup,
        mphos: pruned,
        sse_monitor: spec.sse_monitor()?,
        stats,
    }))
}
