use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::qddc::{evaluate_prefixes, parse, Trace};
use crate::shield::{synthesize, ShieldSpec, ShieldType};
use crate::synthesis::OutputOrder;

fn iface() -> ShieldInterface {
    ShieldInterface::new(&["r"], &["p", "q"], &["p'", "q'"]).unwrap()
}

fn exec(req: &str, t: ShieldType, dm: bool) -> (ShieldSpec, ShieldExecution) {
    let i = iface();
    let req = parse(req, &i.sse_vars().unwrap()).unwrap();
    let mut spec = ShieldSpec::new(i, req, t, OutputOrder::parse("!q' !p'").unwrap()).unwrap();
    spec.dm = dm;
    let r = synthesize(&spec).unwrap().shield().expect("realizable");
    let e = ShieldExecution::from_result(&r).unwrap();
    (spec, e)
}

fn pass_through() -> ShieldExecution {
    let hv = hdc_vars();
    exec("true", ShieldType::Custom(parse("[[!Deviation]]", &hv).unwrap()), false).1
}

fn random_inputs(seed: u64, n: usize, ni: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..ni)).collect()
}

#[test]
fn pass_through_echoes() {
    let e = pass_through();
    let mut inst = ShieldInstance::new(e);
    for i in 0..8 {
        let out = inst.step(i).unwrap();
        assert!(!out.deviation);
        assert!(out.sse_ok);
        // O' equals the low two bits (p q) of the input letter.
        assert_eq!(out.output, i & 3);
    }
    assert_eq!(inst.deviations(), 0);
    assert_eq!(inst.steps(), 8);
}

#[test]
fn line_protocol() {
    let mut inst = ShieldInstance::new(pass_through());
    assert_eq!(inst.step_line("1 0 1").unwrap(), "0 1 0 1");
    assert_eq!(inst.step_line("0 1 1").unwrap(), "1 1 0 1");
    assert!(inst.step_line("0 1").is_err());
    assert!(inst.step_line("0 1 x").is_err());
    assert!(inst.step(8).is_err());
}

#[test]
fn reset_replays() {
    let (_, e) = exec("phi_until(5)", ShieldType::V2 { k: 3 }, false);
    let ins = random_inputs(3, 200, 8);
    let mut inst = ShieldInstance::new(e);
    let a: Vec<_> = ins.iter().map(|&i| inst.step(i).unwrap()).collect();
    inst.reset();
    assert_eq!((inst.steps(), inst.deviations()), (0, 0));
    inst.reset();
    assert_eq!(inst.state(), inst.execution().init());
    let b: Vec<_> = ins.iter().map(|&i| inst.step(i).unwrap()).collect();
    assert_eq!(a, b);
}

#[test]
fn emitted_traces_are_safe_and_in_mps() {
    for t in [ShieldType::V0, ShieldType::V2 { k: 1 }, ShieldType::V3 { e: 1, d: 2 }] {
        for dm in [false, true] {
            let (spec, e) = exec("phi_until(5)", t.clone(), dm);
            let vars = e.vars().clone();
            let req_shield = spec.interface.primed(&spec.req);
            let ins = random_inputs(11, 60, 8);
            let mut inst = ShieldInstance::new(e.clone());
            let letters: Vec<usize> = ins.iter().map(|&i| inst.step(i).unwrap().letter).collect();
            let tr = Trace::new(vars, letters.clone()).unwrap();
            assert!(evaluate_prefixes(&req_shield, &tr).unwrap().iter().all(|&b| b), "{t:?}");
            let sup = e.controller.supervisor();
            assert!(sup.dfa().prefix_acceptance(&letters).iter().all(|&b| b));
            // online = offline replay through the step function
            let mut s = e.init();
            for (&i, &l) in ins.iter().zip(&letters) {
                let (n, out) = e.step(s, i);
                assert_eq!(out.letter, l);
                s = n;
            }
        }
    }
}

#[test]
fn v3_tolerates_one_sse_error_with_one_deviation() {
    let (spec, e) = exec("phi_until(5)", ShieldType::V3 { e: 1, d: 1 }, false);
    let hv = hdc_vars();
    let hdc = crate::shield::hdc_formula(&spec.shield_type).unwrap();
    let vars = spec.interface.sse_vars().unwrap();
    let l = |names: &[&str]| vars.letter_of(names).unwrap().index();
    // p dropped right after a request: REQ fails at exactly one position,
    // and the next request resets the obligation.
    let ins = [l(&["r", "p"]), l(&[]), l(&["r", "p", "q"]), l(&["p"]), l(&["q"]), l(&[]), l(&[])];
    let mut inst = ShieldInstance::new(e);
    let outs: Vec<StepOutput> = ins.iter().map(|&i| inst.step(i).unwrap()).collect();
    assert_eq!(outs.iter().filter(|o| !o.sse_ok).count(), 1);
    assert!(inst.deviations() <= 1);
    let bits: Vec<usize> = outs
        .iter()
        .map(|o| hv.letter_from_bits(&[o.sse_ok, o.deviation]).unwrap().index())
        .collect();
    let tr = Trace::new(hv, bits).unwrap();
    assert!(evaluate_prefixes(&hdc, &tr).unwrap().iter().all(|&b| b));
}

#[test]
fn export_round_trip() {
    for dm in [false, true] {
        let (spec, e) = exec("phi_until(5)", ShieldType::V2 { k: 3 }, dm);
        let text = write_controller(&spec.interface, &e.controller, Some(&e.sse_monitor));
        let back = read_controller(&text).unwrap();
        assert!(back.controller.equivalent(&e.controller).unwrap());
        assert_eq!(back.interface, spec.interface);
        let e2 = back.into_execution().unwrap();
        let ins = random_inputs(5, 300, 8);
        let (mut a, mut b) = (ShieldInstance::new(e.clone()), ShieldInstance::new(e2));
        for i in ins {
            assert_eq!(a.step(i).unwrap(), b.step(i).unwrap());
        }
        assert_eq!(write_controller(&spec.interface, &back_controller(&text), None), strip_monitor(&text));
    }
}

fn back_controller(text: &str) -> Controller {
    read_controller(text).unwrap().controller
}

fn strip_monitor(text: &str) -> String {
    text[..text.find("monitor:").unwrap()].to_string()
}

#[test]
fn export_errors() {
    let (spec, e) = exec("phi_until(5)", ShieldType::V0, false);
    let text = write_controller(&spec.interface, &e.controller, None);
    // drop one table line
    let gap: Vec<&str> = text.lines().filter(|l| !l.starts_with("0 3 ->")).collect();
    assert!(matches!(read_controller(&gap.join("\n")), Err(Error::Integrity(_))));
    let dup = format!("{text}0 3 -> 0 0\n");
    assert!(matches!(read_controller(&dup), Err(Error::Integrity(_))));
    let bad = text.replace("0 3 ->", "0 9 ->");
    assert!(matches!(read_controller(&bad), Err(Error::Format { .. })));
    assert!(read_controller("vars: a\n").is_err());
    assert!(read_controller(&text).unwrap().into_execution().is_err());
}
