//! Acceptance checks for the request/grant (`phi_until(5)`) shield
//! experiments and the supporting property suites. Prints one PASS/FAIL line
//! per criterion and exits non-zero if any criterion fails.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shield_core::analysis::{self, build_dtmc, expected_value, maxlen, property, LatencyResult, BURST, NON_DEVIATION};
use shield_core::automata::{compile, read_dfa, Dfa, DEFAULT_MAX_STATES};
use shield_core::gen::{all_words, random_core, random_sugared};
use shield_core::prop::VarSet;
use shield_core::qddc::{evaluate_prefixes, parse, Trace};
use shield_core::runtime::ShieldExecution;
use shield_core::shield::{build_hshield, synthesize, ShieldInterface, ShieldOutcome, ShieldResult, ShieldSpec, ShieldType};
use shield_core::synthesis::{leq_det, mps, Arith, IoPartition, MpsOutcome, OutputOrder};

/// Criterion 1: absolute tolerance on expected values.
const EV_TOLERANCE: f64 = 1e-3;
/// Criterion 1: per-instance wall-clock budget (synthesis + analysis).
const TIME_BUDGET_SECS: f64 = 10.0;
/// Criterion 5: state-count slack that is only a warning.
const STATE_SLACK: usize = 2;
/// Criterion 7.
const ORACLE_FORMULAS: usize = 200;
const ORACLE_MAX_LEN: usize = 5;
const ORACLE_DEPTH: usize = 3;
/// Criterion 9.
const MC_STEPS: u64 = 1_000_000;
const MC_SIGMAS: f64 = 3.0;
const MC_SEED: u64 = 20_240_601;

struct Row {
    name: &'static str,
    shield: ShieldType,
    dm: bool,
    horizon: usize,
    expected: f64,
    /// Consecutive burst steps; `None` = unbounded.
    latency: Option<u64>,
    states: usize,
}

fn rows() -> Vec<Row> {
    let row = |name, shield, dm, horizon, expected, latency, states| Row {
        name,
        shield,
        dm,
        horizon,
        expected,
        latency,
        states,
    };
    vec![
        row("V0_NoDM", ShieldType::V0, false, 0, 0.25, None, 18),
        row("V2(1)_NoDM", ShieldType::V2 { k: 1 }, false, 0, 0.7142793, Some(1), 14),
        row("V2(3)_NoDM", ShieldType::V2 { k: 3 }, false, 0, 0.5982051, Some(3), 18),
        row("V3(1,1)_NoDM", ShieldType::V3 { e: 1, d: 1 }, false, 0, 0.7499943, Some(0), 13),
        row("V3(1,2)_NoDM", ShieldType::V3 { e: 1, d: 2 }, false, 0, 0.7182475, Some(1), 26),
        row("V3(1,3)_NoDM", ShieldType::V3 { e: 1, d: 3 }, false, 0, 0.6614611, Some(2), 40),
        row("DM_H=0", ShieldType::V0, true, 0, 0.833252, Some(0), 13),
        row("DM_H=10", ShieldType::V0, true, 10, 0.8571396, Some(0), 8),
    ]
}

fn dm_types() -> Vec<ShieldType> {
    vec![
        ShieldType::V0,
        ShieldType::V2 { k: 1 },
        ShieldType::V2 { k: 3 },
        ShieldType::V3 { e: 1, d: 1 },
        ShieldType::V3 { e: 1, d: 2 },
        ShieldType::V3 { e: 1, d: 3 },
    ]
}

fn iface() -> ShieldInterface {
    ShieldInterface::new(&["r"], &["p", "q"], &["p'", "q'"]).unwrap()
}

fn spec(t: &ShieldType, dm: bool, horizon: usize) -> ShieldSpec {
    let i = iface();
    let req = parse("phi_until(5)", &i.sse_vars().unwrap()).unwrap();
    let mut s = ShieldSpec::new(i, req, t.clone(), OutputOrder::parse("!q' !p'").unwrap()).unwrap();
    s.dm = dm;
    s.horizon = horizon;
    s
}

fn shield(t: &ShieldType, dm: bool, horizon: usize) -> Result<ShieldResult, String> {
    match synthesize(&spec(t, dm, horizon)).map_err(|e| e.to_string())? {
        ShieldOutcome::Shield(r) => Ok(r),
        ShieldOutcome::Unrealizable(u) => Err(u.to_string()),
    }
}

struct Outcome {
    pass: bool,
    summary: String,
}

#[derive(Default)]
struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn record(&mut self, n: usize, title: &str, o: Outcome) {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {n:>2}: {title} — {}", o.summary);
        if !o.pass {
            self.failed.push(n);
        }
    }
}

fn detail(s: impl AsRef<str>) {
    println!("    {}", s.as_ref());
}

struct Synth {
    row: Row,
    result: ShieldResult,
    exec: ShieldExecution,
    ev: analysis::ExpectedValue,
    latency: LatencyResult,
    seconds: f64,
}

fn synth_rows() -> Result<Vec<Synth>, String> {
    rows()
        .into_iter()
        .map(|row| {
            let start = Instant::now();
            let result = shield(&row.shield, row.dm, row.horizon).map_err(|e| format!("{}: {e}", row.name))?;
            let exec = ShieldExecution::from_result(&result).map_err(|e| e.to_string())?;
            let m = build_dtmc(&exec, &property(&exec, NON_DEVIATION).unwrap()).map_err(|e| e.to_string())?;
            let ev = expected_value(&m, Arith::Exact).map_err(|e| e.to_string())?;
            let latency = maxlen(&exec, &property(&exec, BURST).unwrap()).map_err(|e| e.to_string())?;
            Ok(Synth {
                row,
                result,
                exec,
                ev,
                latency,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

fn c1_expected(rows: &[Synth]) -> Outcome {
    let mut pass = true;
    let mut exact_digits = 0;
    for s in rows {
        let diff = (s.ev.value - s.row.expected).abs();
        let seven = format!("{:.7}", s.ev.value) == format!("{:.7}", s.row.expected);
        exact_digits += seven as usize;
        let ok = diff <= EV_TOLERANCE && s.seconds < TIME_BUDGET_SECS;
        pass &= ok;
        detail(format!(
            "{:<13} expected {:.7} got {:.7} ({}) |diff| {:.1e} {:.3}s{}",
            s.row.name,
            s.row.expected,
            s.ev.value,
            s.ev.exact.as_ref().map(|r| r.to_string()).unwrap_or_default(),
            diff,
            s.seconds,
            if seven { "" } else { "  [7th digit differs]" }
        ));
    }
    Outcome {
        pass,
        summary: format!(
            "{} shields within ±{EV_TOLERANCE:e} and under {TIME_BUDGET_SECS}s; {exact_digits}/{} match all 7 digits",
            rows.len(),
            rows.len()
        ),
    }
}

fn c2_latency(rows: &[Synth]) -> Outcome {
    let mut pass = true;
    for s in rows {
        let got = s.latency.positions();
        pass &= got == s.row.latency;
        let show = |v: Option<u64>| v.map_or("inf".to_string(), |n| n.to_string());
        detail(format!(
            "{:<13} expected {} got {} (maxlen {})",
            s.row.name,
            show(s.row.latency),
            show(got),
            s.latency
        ));
    }
    // every DM variant, both horizons
    for h in [0, 10] {
        for t in dm_types() {
            let lat = shield(&t, true, h).ok().and_then(|r| {
                let e = ShieldExecution::from_result(&r).ok()?;
                maxlen(&e, &property(&e, BURST).ok()?).ok()
            });
            pass &= lat.map(LatencyResult::positions) == Some(Some(0));
        }
    }
    Outcome {
        pass,
        summary: "burst latency in consecutive steps, NoDM rows exact and all 12 DM variants 0".into(),
    }
}

fn c3_unrealizable() -> Outcome {
    let mut pass = true;
    for k in [1, 3] {
        for dm in [false, true] {
            let unreal = matches!(synthesize(&spec(&ShieldType::V1 { k }, dm, 10)), Ok(ShieldOutcome::Unrealizable(_)));
            detail(format!("V1({k}) dm={dm}: {}", if unreal { "unrealizable" } else { "REALIZABLE" }));
            pass &= unreal;
        }
    }
    Outcome {
        pass,
        summary: "V1(1), V1(3) unrealizable with and without DM".into(),
    }
}

fn c4_convergence() -> Outcome {
    let mut pass = true;
    for h in [0, 10] {
        let cs: Vec<_> = dm_types().iter().filter_map(|t| shield(t, true, h).ok()).collect();
        let mut ok = cs.len() == dm_types().len();
        for a in &cs {
            for b in &cs {
                ok &= a.controller.equivalent(&b.controller).unwrap_or(false);
            }
        }
        detail(format!("H={h}: {} controllers pairwise equivalent: {ok}", cs.len()));
        pass &= ok;
    }
    Outcome {
        pass,
        summary: "DM controllers agree across V0/V2/V3 at H=0 and at H=10".into(),
    }
}

fn c5_states(rows: &[Synth]) -> Outcome {
    let (mut exact, mut warn, mut bad) = (0, 0, 0);
    for s in rows {
        let got = s.exec.monitored_dfa(DEFAULT_MAX_STATES).map(|d| d.num_states()).unwrap_or(0);
        let d = got.abs_diff(s.row.states);
        let note = match d {
            0 => {
                exact += 1;
                ""
            }
            d if d <= STATE_SLACK => {
                warn += 1;
                "  WARNING: differs"
            }
            _ => {
                bad += 1;
                "  MISMATCH"
            }
        };
        detail(format!(
            "{:<13} expected {:>2} got {:>2} (controller {}, MPS {}, hard automaton {}){note}",
            s.row.name,
            s.row.states,
            got,
            s.result.stats.controller_states,
            s.result.stats.mps_states,
            s.result.stats.hshield_states
        ));
    }
    Outcome {
        pass: bad == 0,
        summary: format!("{exact} exact, {warn} within ±{STATE_SLACK} (warning), {bad} beyond"),
    }
}

fn c6_trace_row() -> Outcome {
    let vars = VarSet::new(["r", "p", "q"]).unwrap();
    let rows: [[u8; 21]; 3] = [
        [0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    ];
    let expected = [1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
    let word: Vec<usize> = (0..21)
        .map(|j| (0..3).fold(0, |acc, v| acc << 1 | rows[v][j] as usize))
        .collect();
    let dfa = compile(&parse("phi_until(3)", &vars).unwrap(), &vars).unwrap();
    let got: Vec<u8> = dfa.prefix_acceptance(&word).into_iter().map(u8::from).collect();
    detail(format!("monitor row {got:?}"));
    Outcome {
        pass: got == expected,
        summary: "compiled phi_until(3) monitor reproduces the 21-position row".into(),
    }
}

fn c7_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let names = ["p", "q", "r"];
    let mut discrepancies = 0;
    let mut words = 0usize;
    for k in 0..ORACLE_FORMULAS {
        let vars = VarSet::new(names[..1 + k % 3].iter().copied()).unwrap();
        let d = if k % 2 == 0 {
            random_core(&mut rng, &vars, ORACLE_DEPTH)
        } else {
            random_sugared(&mut rng, &vars, ORACLE_DEPTH)
        };
        let dfa = compile(&d, &vars).unwrap();
        // prefixes of every maximal-length word cover all shorter words
        for w in all_words(&vars, ORACLE_MAX_LEN) {
            words += 1;
            let by_eval = evaluate_prefixes(&d, &Trace::new(vars.clone(), w.clone()).unwrap()).unwrap();
            if by_eval != dfa.prefix_acceptance(&w) {
                discrepancies += 1;
                if discrepancies <= 3 {
                    detail(format!("discrepancy: {d} on {w:?}"));
                }
            }
        }
    }
    Outcome {
        pass: discrepancies == 0,
        summary: format!(
            "{ORACLE_FORMULAS} formulas (depth ≤ {ORACLE_DEPTH}, ≤ 3 variables), {words} words of length {ORACLE_MAX_LEN} with all prefixes: {discrepancies} discrepancies"
        ),
    }
}

fn restricted_language(hard: &Dfa, keep: &[bool]) -> Dfa {
    let n = hard.num_states();
    let k = hard.alphabet_size();
    let mut delta = Vec::new();
    let mut acc = Vec::new();
    for (idx, q) in (0..n).chain([hard.init()]).enumerate() {
        let live = keep[q] || idx == n;
        for a in 0..k {
            let t = hard.next(q, a);
            delta.push(if live && keep[t] { t as u32 } else { (n + 1) as u32 });
        }
        acc.push(live);
    }
    delta.extend(std::iter::repeat_n((n + 1) as u32, k));
    acc.push(false);
    Dfa::from_parts(hard.vars().clone(), n, acc, delta).unwrap()
}

fn c8_games(rows: &[Synth]) -> Outcome {
    let mut pass = true;
    // safety, non-blocking and refinement chain on every experiment
    let mut instances = 0;
    for h in [0, 10] {
        for t in dm_types() {
            for dm in [false, true] {
                let s = spec(&t, dm, h);
                let Ok(ShieldOutcome::Shield(r)) = synthesize(&s) else {
                    pass = false;
                    continue;
                };
                instances += 1;
                let hard = build_hshield(&s).unwrap();
                pass &= r.mps.is_non_blocking() && r.mps.dfa().included_in(&hard).unwrap();
                let last = r.controller.supervisor();
                pass &= last.is_non_blocking() && last.is_deterministic();
                let mid = r.mphos.as_ref().unwrap_or(&r.mps);
                pass &= mid.is_non_blocking();
                pass &= leq_det(&r.mps, mid).unwrap() && leq_det(mid, last).unwrap();
            }
        }
    }
    detail(format!("{instances} synthesized instances safe, non-blocking, MPS ≤ MPHOS ≤ Det_ord"));
    pass &= instances == 24 && rows.len() == 8;
    // maximal permissiveness by brute force over state subsets
    let vars = VarSet::new(["i", "o"]).unwrap();
    let io = IoPartition::new(&vars, &["i"], &["o"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut tiny, mut mp_ok) = (0, true);
    while tiny < 100 {
        let d = random_core(&mut rng, &vars, 3).pref();
        let hard = compile(&d, &vars).unwrap();
        let n = hard.num_states();
        if n > 6 {
            continue;
        }
        tiny += 1;
        let outcome = mps(&hard, &io).unwrap();
        for mask in 0u32..(1 << n) {
            let keep: Vec<bool> = (0..n).map(|q| mask >> q & 1 == 1).collect();
            if (0..n).any(|q| keep[q] && !hard.is_accepting(q)) {
                continue;
            }
            let closed = |q: usize| (0..2).all(|i| (0..2).any(|o| keep[hard.next(q, io.join(i, o))]));
            let init = hard.init();
            if !((0..n).all(|q| !keep[q] || closed(q)) && if hard.is_accepting(init) { keep[init] } else { closed(init) }) {
                continue;
            }
            mp_ok &= match &outcome {
                MpsOutcome::Unrealizable(_) => false,
                MpsOutcome::Realizable(sup) => restricted_language(&hard, &keep).included_in(sup.dfa()).unwrap(),
            };
        }
    }
    detail(format!("maximal permissiveness on {tiny} tiny games: {mp_ok}"));
    pass &= mp_ok;
    // monotonicity on implication pairs
    let mut mono_ok = true;
    for _ in 0..200 {
        let d2 = random_core(&mut rng, &vars, 3);
        let d1 = d2.clone().and(random_core(&mut rng, &vars, 2));
        let (a1, a2) = (compile(&d1, &vars).unwrap(), compile(&d2, &vars).unwrap());
        mono_ok &= a1.included_in(&a2).unwrap();
        mono_ok &= match (mps(&a1, &io).unwrap(), mps(&a2, &io).unwrap()) {
            (MpsOutcome::Realizable(s1), MpsOutcome::Realizable(s2)) => leq_det(&s2, &s1).unwrap(),
            (MpsOutcome::Realizable(_), MpsOutcome::Unrealizable(_)) => false,
            _ => true,
        };
    }
    detail(format!("monotonicity on 200 implication pairs: {mono_ok}"));
    pass &= mono_ok;
    Outcome {
        pass,
        summary: "safety/non-blocking, maximal permissiveness, monotonicity, refinement chain".into(),
    }
}

fn c9_monte_carlo(rows: &[Synth]) -> Outcome {
    let mut pass = true;
    for s in rows {
        let st = analysis::simulate(&s.exec, MC_STEPS, MC_SEED).unwrap();
        let z = (st.non_deviation() - s.ev.value).abs() / st.std_error;
        let ok = z <= MC_SIGMAS || st.non_deviation() == s.ev.value;
        pass &= ok;
        detail(format!(
            "{:<13} simulated {:.5} ± {:.5} vs {:.5} ({z:.2}σ)",
            s.row.name,
            st.non_deviation(),
            st.std_error,
            s.ev.value
        ));
    }
    Outcome {
        pass,
        summary: format!("{MC_STEPS}-step runs within {MC_SIGMAS} standard errors (batch means, seed {MC_SEED})"),
    }
}

fn c10_import() -> Outcome {
    // "o must follow i one step later", written by hand.
    let text = "\
# hand-written: o at step n+1 iff i at step n
vars: i o
states: 3
init: 0
accepting: 1 2
0 0 1
0 2 2
1 0 1
1 2 2
2 1 1
2 3 2
";
    let mut pass = true;
    match read_dfa(text) {
        Ok(d) => {
            let vars = VarSet::new(["i", "o"]).unwrap();
            let reference = compile(&parse("[]((<i>^slen=1) => (slen=1^<o>)) && []((<!i>^slen=1) => (slen=1^<!o>)) && <!o>^true", &vars).unwrap(), &vars).unwrap();
            let same = d.equivalent(&reference).unwrap_or(false);
            detail(format!("imported {} states (sink added {}), equivalent to formula: {same}", d.num_states(), d.num_states() > 3));
            pass &= same;
            let io = IoPartition::new(&vars, &["i"], &["o"]).unwrap();
            let realizable = matches!(mps(&d, &io), Ok(MpsOutcome::Realizable(_)));
            detail(format!("synthesis from imported automaton realizable: {realizable}"));
            pass &= realizable;
        }
        Err(e) => {
            detail(format!("import failed: {e}"));
            pass = false;
        }
    }
    Outcome {
        pass,
        summary: "hand-written automaton imports, matches its formula and feeds synthesis".into(),
    }
}

fn main() {
    let start = Instant::now();
    let mut report = Report::default();
    match synth_rows() {
        Ok(rows) => {
            report.record(1, "reference expected values", c1_expected(&rows));
            report.record(2, "reference latencies", c2_latency(&rows));
            report.record(3, "reference realizability", c3_unrealizable());
            report.record(4, "DM convergence", c4_convergence());
            report.record(5, "reference state counts", c5_states(&rows));
            report.record(6, "request-trace prefix vector", c6_trace_row());
            report.record(7, "compiler vs reference evaluator", c7_oracle());
            report.record(8, "game-theoretic properties", c8_games(&rows));
            report.record(9, "Monte-Carlo cross-check", c9_monte_carlo(&rows));
            report.record(10, "automaton import smoke test", c10_import());
        }
        Err(e) => {
            println!("FAIL synthesis of the reference shields: {e}");
            report.failed.push(0);
        }
    }
    println!("acceptance finished in {:.3}s", start.elapsed().as_secs_f64());
    if !report.failed.is_empty() {
        println!("failed criteria: {:?}", report.failed);
        std::process::exit(1);
    }
}
