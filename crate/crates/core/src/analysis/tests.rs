use std::sync::OnceLock;

use num::{BigInt, BigRational, One};
use proptest::prelude::*;

use super::*;
use crate::gen::random_sugared;
use crate::qddc::{evaluate, parse, Interval, Trace};
use crate::runtime::ShieldInstance;
use crate::shield::{hdc_vars, synthesize, ShieldInterface, ShieldSpec, ShieldType};
use crate::synthesis::OutputOrder;

fn exec(req: &str, t: ShieldType, dm: bool, horizon: usize) -> ShieldExecution {
    let i = ShieldInterface::new(&["r"], &["p", "q"], &["p'", "q'"]).unwrap();
    let req = parse(req, &i.sse_vars().unwrap()).unwrap();
    let mut spec = ShieldSpec::new(i, req, t, OutputOrder::parse("!q' !p'").unwrap()).unwrap();
    spec.dm = dm;
    spec.horizon = horizon;
    ShieldExecution::from_result(&synthesize(&spec).unwrap().shield().expect("realizable")).unwrap()
}

fn until(t: ShieldType) -> ShieldExecution {
    exec("phi_until(5)", t, false, 0)
}

fn shields() -> &'static [ShieldExecution] {
    static S: OnceLock<Vec<ShieldExecution>> = OnceLock::new();
    S.get_or_init(|| {
        vec![
            until(ShieldType::V0),
            until(ShieldType::V2 { k: 1 }),
            until(ShieldType::V2 { k: 3 }),
            until(ShieldType::V3 { e: 1, d: 2 }),
            exec("phi_until(5)", ShieldType::V0, true, 0),
        ]
    })
}

fn pass_through() -> ShieldExecution {
    let c = parse("[[!Deviation]]", &hdc_vars()).unwrap();
    exec("true", ShieldType::Custom(c), false, 0)
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Cesàro average of the state distribution: an oracle independent of the
/// linear-algebra path.
fn cesaro(m: &Dtmc, steps: usize) -> f64 {
    let mut dist = vec![0.0; m.num_states()];
    dist[m.init] = 1.0;
    let mut acc = 0.0;
    for _ in 0..steps {
        let mut next = vec![0.0; m.num_states()];
        for (s, row) in m.rows.iter().enumerate() {
            for &(t, c) in row {
                next[t] += dist[s] * c as f64 / m.denom as f64;
            }
        }
        dist = next;
        acc += dist.iter().zip(&m.accepting).filter(|(_, &a)| a).map(|(p, _)| p).sum::<f64>();
    }
    acc / steps as f64
}

#[test]
fn dtmc_rows_are_stochastic() {
    for e in shields() {
        let d = property(e, NON_DEVIATION).unwrap();
        let m = build_dtmc(e, &d).unwrap();
        for row in &m.rows {
            assert_eq!(row.iter().map(|&(_, c)| c).sum::<u64>(), m.denom);
            let total: BigRational = row.iter().map(|&(t, _)| m.probability(m.rows.iter().position(|r| r == row).unwrap(), t)).sum();
            assert!(total.is_one());
        }
        let mon = monitor(e, &d).unwrap();
        assert!(m.num_states() <= e.reachable().len() * mon.num_states());
        assert_eq!(m.denom, 8);
    }
}

#[test]
fn pass_through_never_deviates() {
    let e = pass_through();
    let m = build_dtmc(&e, &property(&e, NON_DEVIATION).unwrap()).unwrap();
    // every state after the first letter is accepting
    assert!((0..m.num_states()).filter(|&s| s != m.init).all(|s| m.accepting[s]));
    let v = expected_value(&m, Arith::Exact).unwrap();
    assert_eq!(v.exact, Some(BigRational::one()));
    let sim = simulate(&e, 10_000, 1).unwrap();
    assert_eq!(sim.deviations, 0);
    assert_eq!(sim.non_deviation(), 1.0);
}

#[test]
fn expected_value_examples() {
    let e = &shields()[0];
    let m = build_dtmc(e, &property(e, NON_DEVIATION).unwrap()).unwrap();
    assert_eq!(expected_value(&m, Arith::Exact).unwrap().exact, Some(ratio(1, 4)));
    let f = expected_value(&m, Arith::Float).unwrap();
    assert!((f.value - 0.25).abs() < 1e-12);
    assert_eq!(f.exact, None);
    assert_eq!(format!("{f}"), "0.2500000");
}

#[test]
fn expected_value_matches_cesaro_and_lumping() {
    for e in shields() {
        for text in [NON_DEVIATION, "true^<SSEOK>", "true^<p' && !q>", "true^(<Deviation>^slen=1^<!Deviation>)"] {
            let m = build_dtmc(e, &property(e, text).unwrap()).unwrap();
            let exact = expected_value(&m, Arith::Exact).unwrap();
            let unlumped = solve_long_run::<BigRational>(&m, |_| Ok(())).unwrap();
            assert_eq!(exact.exact.as_ref(), Some(&unlumped), "{text}");
            let float = expected_value(&m, Arith::Float).unwrap();
            assert!((exact.value - float.value).abs() < 1e-9);
            let oracle = cesaro(&m, 5_000);
            assert!((exact.value - oracle).abs() < 2e-3, "{text}: {} vs {oracle}", exact.value);
        }
    }
}

#[test]
fn multiple_bsccs_are_reachability_weighted() {
    // The first letter decides forever whether Deviation may appear; the
    // monitor `true^<r>` under a chain with absorbing choice.
    let e = pass_through();
    let d = property(&e, "(<r>^true^<r>) || (<!r>^true)").unwrap();
    let m = build_dtmc(&e, &d).unwrap();
    assert!(m.bsccs().len() >= 2);
    let v = expected_value(&m, Arith::Exact).unwrap();
    // 1/2 (fixed !r start) + 1/2 · 1/2 (last letter r)
    assert_eq!(v.exact, Some(ratio(3, 4)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complement_consistency(seed in any::<u64>(), which in 0usize..5) {
        let e = &shields()[which];
        let vars = crate::prop::VarSet::new(["p", "p'", "SSEOK", "Deviation"]).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let d = random_sugared(&mut rng, &vars, 3);
        let m = build_dtmc(e, &d).unwrap();
        let a = expected_value(&m, Arith::Exact).unwrap().exact.unwrap();
        let b = expected_value(&m.complement(), Arith::Exact).unwrap().exact.unwrap();
        prop_assert!(a >= ratio(0, 1) && a <= ratio(1, 1));
        prop_assert_eq!(a + b, BigRational::one());
    }
}

#[test]
fn latency_examples() {
    let s = shields();
    let burst = |e: &ShieldExecution| maxlen(e, &property(e, BURST).unwrap()).unwrap();
    assert_eq!(burst(&s[0]), LatencyResult::Infinite);
    assert_eq!(burst(&s[1]), LatencyResult::Finite(0));
    assert_eq!(burst(&s[2]), LatencyResult::Finite(2));
    assert_eq!(burst(&s[2]).positions(), Some(3));
    assert_eq!(burst(&s[4]), LatencyResult::Undefined);
    assert_eq!(burst(&s[4]).positions(), Some(0));
    for e in s {
        assert_eq!(maxlen(e, &property(e, "[[false]]").unwrap()).unwrap(), LatencyResult::Undefined);
    }
    let e = &s[1];
    assert!(matches!(maxlen(e, &property(e, "[p]^<q>").unwrap()), Err(Error::NotPrefixClosed)));
    assert_eq!(format!("{}", LatencyResult::Infinite), "inf");
}

/// Longest satisfying interval found by enumerating input sequences from
/// every reachable state, checking each candidate with the reference
/// evaluator. Stops at `depth` positions.
fn brute_maxlen(e: &ShieldExecution, d: &Qddc, depth: usize) -> Option<usize> {
    let ext = e.extended_vars();
    let ni = e.io().num_inputs();
    let mut best: Option<usize> = None;
    let mut budget = 2_000_000usize;
    #[allow(clippy::too_many_arguments)]
    fn go(
        e: &ShieldExecution,
        d: &Qddc,
        ext: &crate::prop::VarSet,
        ni: usize,
        s: ExecState,
        word: &mut Vec<usize>,
        depth: usize,
        best: &mut Option<usize>,
        budget: &mut usize,
    ) -> bool {
        for i in 0..ni {
            *budget = budget.saturating_sub(1);
            assert!(*budget > 0, "enumeration budget exhausted");
            let (t, out) = e.step(s, i);
            word.push(e.extended_letter(&out));
            let tr = Trace::new(ext.clone(), word.clone()).unwrap();
            if evaluate(d, &tr, Interval::new(0, word.len() - 1)).unwrap() {
                *best = Some(best.map_or(word.len(), |b: usize| b.max(word.len())));
                if word.len() >= depth || go(e, d, ext, ni, t, word, depth, best, budget) {
                    word.pop();
                    return true;
                }
            }
            word.pop();
        }
        false
    }
    for s in e.reachable() {
        if go(e, d, &ext, ni, s, &mut Vec::new(), depth, &mut best, &mut budget) {
            break;
        }
    }
    best.map(|positions| positions - 1)
}

#[test]
fn maxlen_agrees_with_enumeration() {
    for e in shields().iter().skip(1) {
        for text in [BURST, "[[Deviation]]", "[[!SSEOK]]", "[[SSEOK && (p <=> p')]]", "[[Deviation && !q']]"] {
            let d = property(e, text).unwrap();
            let product = build_dtmc(e, &d).unwrap().num_states();
            let depth = 2 * product + 2;
            let got = maxlen(e, &d).unwrap();
            let brute = brute_maxlen(e, &d, depth);
            match got {
                LatencyResult::Finite(n) => assert_eq!(brute, Some(n as usize), "{text}"),
                LatencyResult::Undefined => assert_eq!(brute, None, "{text}"),
                LatencyResult::Infinite => assert_eq!(brute, Some(depth - 1), "{text}"),
            }
        }
    }
}

#[test]
fn witness_replays() {
    for e in shields().iter().skip(1).take(3) {
        let d = property(e, BURST).unwrap();
        let (lat, w) = maxlen_witness(e, &d).unwrap();
        let LatencyResult::Finite(n) = lat else { panic!("finite expected") };
        let w = w.unwrap();
        assert_eq!(w.interval.len(), n as usize + 1);
        let mut inst = ShieldInstance::new(e.clone());
        let letters: Vec<usize> = w
            .prefix
            .iter()
            .chain(&w.interval)
            .map(|&i| e.extended_letter(&inst.step(i).unwrap()))
            .collect();
        let tr = Trace::new(e.extended_vars(), letters.clone()).unwrap();
        let b = w.prefix.len();
        assert!(evaluate(&d, &tr, Interval::new(b, letters.len() - 1)).unwrap());
    }
}

#[test]
fn simulation_respects_latency_bound() {
    for e in shields().iter().skip(1) {
        let d = property(e, BURST).unwrap();
        let bound = maxlen(e, &d).unwrap().positions().unwrap() as usize;
        let (mut run, mut longest) = (0usize, 0usize);
        simulate_with(e, 200_000, 9, |s| {
            run = if s.out.sse_ok && s.out.deviation { run + 1 } else { 0 };
            longest = longest.max(run);
        })
        .unwrap();
        assert!(longest <= bound, "{longest} > {bound}");
    }
}

#[test]
fn simulation_basics() {
    let e = &shields()[1];
    let (t1, s1) = simulate_trace(e, 1000, 42).unwrap();
    let (t2, s2) = simulate_trace(e, 1000, 42).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(s1, s2);
    assert_ne!(simulate_trace(e, 1000, 43).unwrap().0, t1);
    let (one, st) = simulate_trace(e, 1, 0).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(st.steps, 1);
    assert!(simulate(e, 0, 0).is_err());
    // replaying the inputs through an instance reproduces the trace
    let mut inst = ShieldInstance::new(e.clone());
    for s in &t1 {
        assert_eq!(inst.step(s.input).unwrap(), s.out);
    }
}

#[test]
fn simulation_estimates_expected_value() {
    let e = &shields()[2];
    let m = build_dtmc(e, &property(e, NON_DEVIATION).unwrap()).unwrap();
    let exact = expected_value(&m, Arith::Exact).unwrap().value;
    let sim = simulate(e, 200_000, 7).unwrap();
    assert!(sim.std_error > 0.0);
    assert!((sim.non_deviation() - exact).abs() <= 4.0 * sim.std_error, "{sim:?} vs {exact}");
}

#[test]
fn mrmc_export() {
    let e = &shields()[1];
    let m = build_dtmc(e, &property(e, NON_DEVIATION).unwrap()).unwrap();
    let (tra, lab) = m.to_mrmc();
    let mut lines = tra.lines();
    assert_eq!(lines.next().unwrap(), format!("STATES {}", m.num_states()));
    assert_eq!(lines.next().unwrap(), format!("TRANSITIONS {}", m.num_transitions()));
    let mut sums = vec![0.0f64; m.num_states() + 1];
    let mut n = 0;
    for l in lines {
        let p: Vec<&str> = l.split(' ').collect();
        let s: usize = p[0].parse().unwrap();
        assert!(s >= 1);
        sums[s] += p[2].parse::<f64>().unwrap();
        n += 1;
    }
    assert_eq!(n, m.num_transitions());
    assert!(sums[1..].iter().all(|&x| x == 1.0));
    assert!(lab.starts_with("#DECLARATION\naccepting\n#END\n"));
    let marked = lab.lines().skip(3).count();
    assert_eq!(marked, m.accepting.iter().filter(|&&a| a).count());
}

#[test]
fn dyadic_decimals() {
    assert_eq!(dyadic_decimal(1, 3), "0.125");
    assert_eq!(dyadic_decimal(8, 3), "1");
    assert_eq!(dyadic_decimal(3, 2), "0.75");
    assert_eq!(dyadic_decimal(1, 20), "0.00000095367431640625");
    assert_eq!(dyadic_decimal(5, 0), "5");
}

#[test]
fn report_fields() {
    let r = analyze(&shields()[0], Arith::Exact).unwrap();
    let kv = r.to_kv();
    assert!(kv.contains("expected_value=0.2500000\n"));
    assert!(kv.contains("expected_value_exact=1/4\n"));
    assert!(kv.contains("latency=inf\n"));
    assert!(kv.contains("controller_states="));
}
