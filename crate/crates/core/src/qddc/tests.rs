use super::*;
use crate::gen;
use crate::prop::PropFormula as P;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rpq() -> VarSet {
    VarSet::new(["r", "p", "q"]).unwrap()
}

fn request_trace() -> Trace {
    Trace::from_rows(
        rpq(),
        &[
            &[0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
            &[0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        ],
    )
    .unwrap()
}

const REQUEST_TRACE_ROW: [u8; 21] = [1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];

#[test]
fn parse_box_implies() {
    let vs = VarSet::new(["Deviation"]).unwrap();
    let d = parse("[]([[Deviation]]=>slen<3)", &vs).unwrap();
    assert_eq!(
        d,
        Qddc::All(P::var("Deviation")).implies(Qddc::Slen(Cmp::Lt, 3)).square()
    );
}

#[test]
fn parse_pt_and_chop() {
    let vs = VarSet::new(["p", "q"]).unwrap();
    assert_eq!(desugar(&parse("pt", &vs).unwrap()), Qddc::Point(P::True));
    assert_eq!(
        parse("<p>^<q>", &vs).unwrap(),
        Qddc::Point(P::var("p")).chop(Qddc::Point(P::var("q")))
    );
}

#[test]
fn parse_reports_position() {
    let vs = VarSet::new(["p"]).unwrap();
    match parse("<p> &&\n  [[p ]", &vs) {
        Err(Error::Syntax { pos, .. }) => assert_eq!((pos.line, pos.col), (2, 7)),
        other => panic!("expected syntax error, got {other:?}"),
    }
    assert!(matches!(parse("<z>", &vs), Err(Error::UndeclaredVariable(v)) if v == "z"));
}

#[test]
fn parse_precedence() {
    let vs = VarSet::new(["p", "q"]).unwrap();
    // `^` binds tighter than `&&`, `&&` tighter than `||`.
    let d = parse("<p>^<q> && pt || ext", &vs).unwrap();
    let expect = Qddc::Point(P::var("p"))
        .chop(Qddc::Point(P::var("q")))
        .and(Qddc::Pt)
        .or(Qddc::Ext);
    assert_eq!(d, expect);
    // `=>` right associative, looser than `||`.
    let d = parse("pt => ext => pt || ext", &vs).unwrap();
    assert_eq!(d, Qddc::Pt.implies(Qddc::Ext.implies(Qddc::Pt.or(Qddc::Ext))));
    // quantifier body extends maximally.
    let d = parse("pt && ex p. <p> || ext", &vs).unwrap();
    assert_eq!(
        d,
        Qddc::Pt.and(Qddc::exists("p", Qddc::Point(P::var("p")).or(Qddc::Ext)))
    );
    // prop precedence inside brackets.
    let d = parse("[[p => q <=> !p || q]]", &vs).unwrap();
    assert_eq!(
        d,
        Qddc::All(P::var("p").implies(P::var("q")).iff(P::var("p").not().or(P::var("q"))))
    );
}

#[test]
fn quantified_variable_need_not_be_declared() {
    let vs = VarSet::new(["p"]).unwrap();
    let d = parse("ex w. [[w <=> p]]", &vs).unwrap();
    assert!(d.free_vars() == vec!["p".to_string()]);
}

#[test]
fn desugar_examples() {
    let vs = VarSet::new(["p"]).unwrap();
    let d = Qddc::Point(P::var("p"));
    assert_eq!(desugar(&Qddc::Pt), Qddc::Point(P::True));
    assert_eq!(desugar(&d.clone().pref()), d.clone().not().chop(Qddc::truth()).not());
    assert_eq!(
        desugar(&d.clone().square()),
        Qddc::truth().chop(d.clone().not()).chop(Qddc::truth()).not()
    );
    let nested = parse("[]([]<p>)", &vs).unwrap();
    assert!(desugar(&nested).is_core());
}

#[test]
fn until_examples() {
    let t = request_trace();
    let until = parse("Until(p,q,3)", &rpq()).unwrap();
    assert!(evaluate(&until, &t, Interval::new(5, 9)).unwrap());
    assert!(evaluate(&until, &t, Interval::new(11, 12)).unwrap());
    assert!(!evaluate(&until, &t, Interval::new(2, 4)).unwrap());
}

#[test]
fn request_trace_row() {
    let t = request_trace();
    let phi = parse("phi_until(3)", &rpq()).unwrap();
    let row: Vec<u8> = evaluate_prefixes(&phi, &t).unwrap().into_iter().map(u8::from).collect();
    assert_eq!(row, REQUEST_TRACE_ROW);
}

#[test]
fn point_interval_truth() {
    let t = request_trace();
    for b in 0..t.len() {
        assert!(evaluate(&Qddc::Pt, &t, Interval::new(b, b)).unwrap());
    }
    assert!(matches!(
        evaluate(&Qddc::Pt, &t, Interval::new(3, 30)),
        Err(Error::IntervalOutOfRange { .. })
    ));
}

#[test]
fn macro_expansions_match_text() {
    let m = builtin_macros();
    let vs = rpq();
    let until = m.expand("Until", &["p", "q", "3"]).unwrap();
    assert_eq!(
        parse(&until, &vs).unwrap(),
        parse("((slen<3) && [[p]]) || (((([p]||pt)^<q>) && slen<=3)^true)", &vs).unwrap()
    );
    let body = parse("<q>", &vs).unwrap();
    let since = parse("SinceLast(p, <q>)", &vs).unwrap();
    let expect = parse("!(true^(<p>^((slen=1^[[!p]])||pt) && !(<q>)))", &vs).unwrap();
    assert_eq!(since, expect);
    let _ = body;
    let dv = VarSet::new(["SSEOK", "Deviation"]).unwrap();
    assert_eq!(
        parse("NoSpuriousDeviation", &dv).unwrap(),
        parse("[]((<!Deviation>^[[SSEOK]]) => [[!Deviation]])", &dv).unwrap()
    );
    assert!(matches!(m.expand("Until", &["p"]), Err(Error::Arity { expected: 3, got: 1, .. })));
    assert!(matches!(parse("Until(p,q)", &vs), Err(Error::Arity { .. })));
}

#[test]
fn user_macros() {
    let mut m = builtin_macros();
    m.define("Both", &["a", "b"], "[[a && b]]").unwrap();
    let vs = VarSet::new(["x", "y"]).unwrap();
    assert_eq!(
        parse_with("Both(x, !y)", &vs, &m).unwrap(),
        Qddc::All(P::var("x").and(P::var("y").not()))
    );
    m.define("Loop", &[], "Loop").unwrap();
    assert!(matches!(parse_with("Loop", &vs, &m), Err(Error::Syntax { .. })));
}

#[test]
fn cascade_example() {
    let base = VarSet::new(["o", "o'"]).unwrap();
    let with_dev = base.union(&VarSet::new(["dev"]).unwrap());
    let d = parse("scount dev <= 3", &with_dev).unwrap();
    let d1 = Qddc::at_end(P::var("o").iff(P::var("o'")).not());
    let c = cascade(d.clone(), &[IndicatorDef::new(d1.clone(), "dev")], &base).unwrap();
    let expect = parse("(scount dev <= 3) && pref(EP(dev) <=> true^<!(o <=> o')>)", &with_dev).unwrap();
    assert_eq!(c, expect);
    assert_eq!(cascade(d.clone(), &[], &base).unwrap(), d);
    // collision with a declared variable or a duplicate witness
    assert!(cascade(d.clone(), &[IndicatorDef::new(d1.clone(), "o")], &base).is_err());
    assert!(cascade(
        d,
        &[IndicatorDef::new(d1.clone(), "dev"), IndicatorDef::new(d1, "dev")],
        &base
    )
    .is_err());
}

#[test]
fn cascade_with_inddef_adds_two_conjuncts() {
    let base = VarSet::new(["r", "p", "q", "p'", "q'"]).unwrap();
    let w = base.union(&VarSet::new(["SSEOK", "Deviation"]).unwrap());
    let hdc = parse("NoSpuriousDeviation", &w).unwrap();
    let req = parse("phi_until(5)", &base).unwrap();
    let dev = Qddc::at_end(P::var("p").iff(P::var("p'")).not().or(P::var("q").iff(P::var("q'")).not()));
    let c = cascade(
        hdc.clone(),
        &[IndicatorDef::new(req, "SSEOK"), IndicatorDef::new(dev, "Deviation")],
        &base,
    )
    .unwrap();
    match c {
        Qddc::And(lhs, last) => {
            assert!(matches!(*last, Qddc::Pref(_)));
            match *lhs {
                Qddc::And(inner, first) => {
                    assert_eq!(*inner, hdc);
                    assert!(matches!(*first, Qddc::Pref(_)));
                }
                _ => panic!("expected two conjuncts"),
            }
        }
        _ => panic!("expected conjunction"),
    }
}

fn small_traces(vars: &VarSet, max_len: usize) -> Vec<Trace> {
    (1..=max_len)
        .flat_map(|n| gen::all_words(vars, n).collect::<Vec<_>>())
        .map(|w| Trace::new(vars.clone(), w).unwrap())
        .collect()
}

#[test]
fn desugar_preserves_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vs = VarSet::new(["a", "b"]).unwrap();
    let traces = small_traces(&vs, 4);
    for _ in 0..150 {
        let d = gen::random_sugared(&mut rng, &vs, 3);
        let core = desugar(&d);
        assert!(core.is_core(), "{d} -> {core}");
        for t in &traces {
            for e in 0..t.len() {
                for b in 0..=e {
                    let iv = Interval::new(b, e);
                    assert_eq!(
                        evaluate(&d, t, iv).unwrap(),
                        evaluate(&core, t, iv).unwrap(),
                        "{d} on {:?} {iv:?}",
                        t.letters
                    );
                }
            }
        }
    }
}

#[test]
fn chop_and_pref_definitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vs = VarSet::new(["a", "b"]).unwrap();
    let traces = small_traces(&vs, 4);
    for _ in 0..60 {
        let d1 = gen::random_core(&mut rng, &vs, 2);
        let d2 = gen::random_core(&mut rng, &vs, 2);
        let ch = d1.clone().chop(d2.clone());
        let pf = d1.clone().pref();
        for t in &traces {
            let n = t.len();
            for e in 0..n {
                for b in 0..=e {
                    let lhs = evaluate(&ch, t, Interval::new(b, e)).unwrap();
                    let rhs = (b..=e).any(|i| {
                        evaluate(&d1, t, Interval::new(b, i)).unwrap()
                            && evaluate(&d2, t, Interval::new(i, e)).unwrap()
                    });
                    assert_eq!(lhs, rhs);
                }
                let lhs = evaluate(&pf, t, Interval::new(0, e)).unwrap();
                let rhs = (0..=e).all(|k| evaluate(&d1, t, Interval::new(0, k)).unwrap());
                assert_eq!(lhs, rhs);
            }
        }
    }
}

#[test]
fn cascade_forces_witnesses() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = VarSet::new(["a"]).unwrap();
    let full = VarSet::new(["a", "w"]).unwrap();
    let traces = small_traces(&full, 4);
    for _ in 0..40 {
        let di = gen::random_core(&mut rng, &base, 2);
        let d = gen::random_core(&mut rng, &full, 2);
        let c = cascade(d.clone(), &[IndicatorDef::new(di.clone(), "w")], &base).unwrap();
        let w_pos = full.position("w").unwrap();
        for t in &traces {
            let truth = evaluate_prefixes(&di, t).unwrap();
            let consistent = (0..t.len()).all(|i| full.bit(t.letters[i], w_pos) == truth[i]);
            let whole = Interval::new(0, t.len() - 1);
            let got = evaluate(&c, t, whole).unwrap();
            if consistent {
                assert_eq!(got, evaluate(&d, t, whole).unwrap());
            } else {
                assert!(!got);
            }
        }
    }
}

#[test]
fn display_reparses() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vs = VarSet::new(["a", "b"]).unwrap();
    for _ in 0..200 {
        let d = gen::random_sugared(&mut rng, &vs, 3);
        let text = d.to_string();
        let back = parse(&text, &vs).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(desugar(&back), desugar(&d), "{text}");
    }
}
