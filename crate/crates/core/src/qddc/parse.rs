//! Concrete syntax.
//!
//! Precedence, loosest first: quantifier bodies (extend as far as possible),
//! `<=>`, `=>` (right associative), `||`, `&&`, `^`, then the prefix operators
//! `!`, `[]`, `<>`, `pref`. Propositional formulas inside `<..>`, `[..]`,
//! `[[..]]` and after `scount`/`sdur` use `!` > `&&` > `||` > `=>` > `<=>`.
//!
//! Macro calls are expanded on the token stream before parsing continues, so
//! a parameter may stand for a variable, a number or a whole formula.

use std::collections::HashMap;

use super::{Cmp, Qddc};
use crate::error::{Error, Pos, Result};
use crate::prop::{PropFormula, VarSet};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u64),
    LParen,
    RParen,
    Comma,
    Dot,
    Lt,
    Le,
    Gt,
    Ge,
    EqSign,
    LBrack,
    RBrack,
    LLBrack,
    RRBrack,
    BoxOp,
    DiamondOp,
    Caret,
    Bang,
    AndAnd,
    OrOr,
    Arrow,
    DArrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> String {
        match self {
            Tok::Ident(s) => s.clone(),
            Tok::Num(n) => n.to_string(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Comma => ",".into(),
            Tok::Dot => ".".into(),
            Tok::Lt => "<".into(),
            Tok::Le => "<=".into(),
            Tok::Gt => ">".into(),
            Tok::Ge => ">=".into(),
            Tok::EqSign => "=".into(),
            Tok::LBrack => "[".into(),
            Tok::RBrack => "]".into(),
            Tok::LLBrack => "[[".into(),
            Tok::RRBrack => "]]".into(),
            Tok::BoxOp => "[]".into(),
            Tok::DiamondOp => "<>".into(),
            Tok::Caret => "^".into(),
            Tok::Bang => "!".into(),
            Tok::AndAnd => "&&".into(),
            Tok::OrOr => "||".into(),
            Tok::Arrow => "=>".into(),
            Tok::DArrow => "<=>".into(),
            Tok::Eof => String::new(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    pos: Pos,
}

fn lex(text: &str, origin: Pos) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (origin.line.max(1), origin.col.max(1));
    let mut i = 0;
    let at = |k: usize| chars.get(k).copied();
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && at(i + 1) == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            (Tok::Ident(chars[start..j].iter().collect()), j - start)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            let n = s.parse::<u64>().map_err(|_| Error::Syntax {
                pos,
                msg: format!("number `{s}` too large"),
            })?;
            (Tok::Num(n), j - i)
        } else {
            match (c, at(i + 1), at(i + 2)) {
                ('<', Some('='), Some('>')) => (Tok::DArrow, 3),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('<', Some('>'), _) => (Tok::DiamondOp, 2),
                ('<', _, _) => (Tok::Lt, 1),
                // `<q>=>D`: the `>` closes the point, `=>` follows.
                ('>', Some('='), Some('>')) => (Tok::Gt, 1),
                ('>', Some('='), _) => (Tok::Ge, 2),
                ('>', _, _) => (Tok::Gt, 1),
                ('=', Some('>'), _) => (Tok::Arrow, 2),
                ('=', _, _) => (Tok::EqSign, 1),
                ('[', Some('['), _) => (Tok::LLBrack, 2),
                ('[', Some(']'), _) => (Tok::BoxOp, 2),
                ('[', _, _) => (Tok::LBrack, 1),
                (']', Some(']'), _) => (Tok::RRBrack, 2),
                (']', _, _) => (Tok::RBrack, 1),
                ('&', Some('&'), _) => (Tok::AndAnd, 2),
                ('|', Some('|'), _) => (Tok::OrOr, 2),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                (',', _, _) => (Tok::Comma, 1),
                ('.', _, _) => (Tok::Dot, 1),
                ('^', _, _) => (Tok::Caret, 1),
                ('!', _, _) => (Tok::Bang, 1),
                _ => {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            }
        };
        out.push(Spanned { tok, pos });
        i += len;
        col += len;
    }
    out.push(Spanned {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "ex", "all", "slen", "scount", "sdur", "pt", "ext", "pref", "EP", "true", "false",
];

/// A named formula template. Parameters are replaced token-for-token (each
/// argument wrapped in parentheses) in the body.
#[derive(Clone, Debug)]
pub struct Macro {
    pub params: Vec<String>,
    body: Vec<Spanned>,
    source: String,
}

impl Macro {
    pub fn body_text(&self) -> &str {
        &self.source
    }
}

#[derive(Clone, Debug, Default)]
pub struct MacroTable {
    macros: HashMap<String, Macro>,
}

impl MacroTable {
    pub fn new() -> Self {
        MacroTable::default()
    }

    pub fn define(&mut self, name: &str, params: &[&str], body: &str) -> Result<()> {
        self.define_at(name, params, body, Pos { line: 1, col: 1 })
    }

    pub(crate) fn define_at(&mut self, name: &str, params: &[&str], body: &str, pos: Pos) -> Result<()> {
        if KEYWORDS.contains(&name) {
            return Err(Error::Syntax {
                pos,
                msg: format!("`{name}` is a keyword"),
            });
        }
        let mut toks = lex(body, pos)?;
        toks.pop();
        self.macros.insert(
            name.to_string(),
            Macro {
                params: params.iter().map(|s| s.to_string()).collect(),
                body: toks,
                source: body.to_string(),
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Macro> {
        self.macros.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.macros.contains_key(name)
    }

    /// Textual expansion of one call, e.g. `expand("Until", &["p","q","3"])`.
    pub fn expand(&self, name: &str, args: &[&str]) -> Result<String> {
        let m = self
            .get(name)
            .ok_or_else(|| Error::UndeclaredVariable(name.to_string()))?;
        if m.params.len() != args.len() {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: m.params.len(),
                got: args.len(),
            });
        }
        let mut arg_toks = Vec::new();
        for a in args {
            let mut t = lex(a, Pos::default())?;
            t.pop();
            arg_toks.push(t);
        }
        let toks = substitute(m, &arg_toks);
        Ok(render_tokens(&toks))
    }
}

fn substitute(m: &Macro, args: &[Vec<Spanned>]) -> Vec<Spanned> {
    let mut out = Vec::new();
    for t in &m.body {
        match &t.tok {
            Tok::Ident(id) => match m.params.iter().position(|p| p == id) {
                Some(k) => {
                    out.push(Spanned { tok: Tok::LParen, pos: t.pos });
                    out.extend(args[k].iter().cloned());
                    out.push(Spanned { tok: Tok::RParen, pos: t.pos });
                }
                None => out.push(t.clone()),
            },
            _ => out.push(t.clone()),
        }
    }
    out
}

fn render_tokens(toks: &[Spanned]) -> String {
    let mut s = String::new();
    for (i, t) in toks.iter().enumerate() {
        let word = matches!(t.tok, Tok::Ident(_) | Tok::Num(_));
        if i > 0 && word && matches!(toks[i - 1].tok, Tok::Ident(_) | Tok::Num(_)) {
            s.push(' ');
        }
        s.push_str(&t.tok.text());
    }
    s
}

/// Macros every spec can use: `Until(p,q,n)`, `SinceLast(p,D)`,
/// `NoSpuriousDeviation` and `phi_until(n)`.
pub fn builtin_macros() -> MacroTable {
    let mut t = MacroTable::new();
    t.define(
        "Until",
        &["p", "q", "n"],
        "((slen<(n)) && [[p]]) || (((([p]||pt)^<q>) && slen<=n)^true)",
    )
    .expect("builtin");
    t.define("SinceLast", &["p", "D"], "!(true^(<p>^((slen=1^[[!p]])||pt) && !(D)))")
        .expect("builtin");
    t.define(
        "NoSpuriousDeviation",
        &[],
        "[]((<!Deviation>^[[SSEOK]]) => [[!Deviation]])",
    )
    .expect("builtin");
    t.define("phi_until", &["n"], "SinceLast(r, Until(p,q,n))")
        .expect("builtin");
    t
}

const MAX_EXPANSIONS: usize = 10_000;
const MAX_NESTING: usize = 256;

struct Parser<'a> {
    toks: Vec<Spanned>,
    i: usize,
    vars: &'a VarSet,
    bound: Vec<String>,
    macros: &'a MacroTable,
    expansions: usize,
    nesting: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.err(format!("expected `{}`, found {}", t.text(), self.peek().describe()))
        }
    }

    fn var(&self, name: &str) -> Result<PropFormula> {
        if self.bound.iter().any(|b| b == name) || self.vars.contains(name) {
            Ok(PropFormula::var(name))
        } else {
            Err(Error::UndeclaredVariable(name.to_string()))
        }
    }

    // ---- QDDC level ----

    fn expr(&mut self) -> Result<Qddc> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return self.err("formula nested too deeply (recursive macro?)");
        }
        let r = self.expr_inner();
        self.nesting -= 1;
        r
    }

    fn expr_inner(&mut self) -> Result<Qddc> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::DArrow) {
            let rhs = self.implies()?;
            lhs = lhs.iff(rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Qddc> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implies()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Qddc> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.and()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Qddc> {
        let mut lhs = self.chop()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.chop()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn chop(&mut self) -> Result<Qddc> {
        let mut lhs = self.unary()?;
        while self.eat(&Tok::Caret) {
            let rhs = self.unary()?;
            lhs = lhs.chop(rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Qddc> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(self.unary()?.not())
            }
            Tok::BoxOp => {
                self.bump();
                Ok(self.unary()?.square())
            }
            Tok::DiamondOp => {
                self.bump();
                Ok(self.unary()?.diamond())
            }
            Tok::Ident(k) if k == "pref" => {
                self.bump();
                Ok(self.unary()?.pref())
            }
            Tok::Ident(k) if k == "ex" || k == "all" => {
                self.bump();
                let v = match self.bump() {
                    Tok::Ident(v) if !KEYWORDS.contains(&v.as_str()) => v,
                    other => return self.err(format!("expected variable after `{k}`, found {}", other.describe())),
                };
                self.expect(Tok::Dot)?;
                self.bound.push(v.clone());
                let body = self.expr();
                self.bound.pop();
                let body = body?;
                Ok(if k == "ex" {
                    Qddc::exists(v, body)
                } else {
                    Qddc::forall(v, body)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Qddc> {
        let pos = self.pos();
        match self.bump() {
            Tok::LParen => {
                let d = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(d)
            }
            Tok::Lt => {
                let p = self.prop()?;
                self.expect(Tok::Gt)?;
                Ok(Qddc::Point(p))
            }
            Tok::LBrack => {
                let p = self.prop()?;
                self.expect(Tok::RBrack)?;
                Ok(Qddc::AllButLast(p))
            }
            Tok::LLBrack => {
                let p = self.prop()?;
                self.expect(Tok::RRBrack)?;
                Ok(Qddc::All(p))
            }
            Tok::Ident(k) => match k.as_str() {
                "slen" => {
                    let c = self.cmp()?;
                    Ok(Qddc::Slen(c, self.number()?))
                }
                "scount" => {
                    let p = self.prop()?;
                    let c = self.cmp()?;
                    Ok(Qddc::Scount(p, c, self.number()?))
                }
                "sdur" => {
                    let p = self.prop()?;
                    let c = self.cmp()?;
                    Ok(Qddc::Sdur(p, c, self.number()?))
                }
                "pt" => Ok(Qddc::Pt),
                "ext" => Ok(Qddc::Ext),
                "true" => Ok(Qddc::truth()),
                "false" => Ok(Qddc::falsity()),
                "EP" => {
                    self.expect(Tok::LParen)?;
                    let w = match self.bump() {
                        Tok::Ident(w) => w,
                        other => return self.err(format!("expected variable in EP, found {}", other.describe())),
                    };
                    self.expect(Tok::RParen)?;
                    self.var(&w)?;
                    Ok(Qddc::Ep(w))
                }
                _ if self.macros.contains(&k) => {
                    self.expand_call(&k, pos)?;
                    self.primary()
                }
                _ => Err(Error::Syntax {
                    pos,
                    msg: format!("unknown formula name `{k}`"),
                }),
            },
            other => Err(Error::Syntax {
                pos,
                msg: format!("expected a formula, found {}", other.describe()),
            }),
        }
    }

    /// Replaces the macro call whose name was just consumed by its
    /// parenthesized expansion, leaving the cursor at the opening paren.
    fn expand_call(&mut self, name: &str, pos: Pos) -> Result<()> {
        self.expansions += 1;
        if self.expansions > MAX_EXPANSIONS {
            return Err(Error::Syntax {
                pos,
                msg: "macro expansion limit reached (recursive macro?)".into(),
            });
        }
        let start = self.i - 1;
        let mut args: Vec<Vec<Spanned>> = Vec::new();
        if self.peek() == &Tok::LParen {
            self.bump();
            let mut depth = 0usize;
            let mut cur = Vec::new();
            loop {
                let t = self.toks[self.i].clone();
                match t.tok {
                    Tok::Eof => return self.err(format!("unterminated call to `{name}`")),
                    Tok::LParen => depth += 1,
                    Tok::RParen if depth == 0 => {
                        self.bump();
                        if !cur.is_empty() || !args.is_empty() {
                            args.push(std::mem::take(&mut cur));
                        }
                        break;
                    }
                    Tok::RParen => depth -= 1,
                    Tok::Comma if depth == 0 => {
                        self.bump();
                        args.push(std::mem::take(&mut cur));
                        continue;
                    }
                    _ => {}
                }
                cur.push(t);
                self.bump();
            }
        }
        let m = self.macros.get(name).expect("checked by caller");
        if m.params.len() != args.len() {
            return Err(Error::Arity {
                name: name.to_string(),
                expected: m.params.len(),
                got: args.len(),
            });
        }
        let mut body = vec![Spanned { tok: Tok::LParen, pos }];
        body.extend(substitute(m, &args).into_iter().map(|mut s| {
            s.pos = pos;
            s
        }));
        body.push(Spanned { tok: Tok::RParen, pos });
        let end = self.i;
        self.toks.splice(start..end, body);
        self.i = start;
        Ok(())
    }

    fn cmp(&mut self) -> Result<Cmp> {
        Ok(match self.bump() {
            Tok::Lt => Cmp::Lt,
            Tok::Le => Cmp::Le,
            Tok::EqSign => Cmp::Eq,
            Tok::Ge => Cmp::Ge,
            Tok::Gt => Cmp::Gt,
            other => return self.err(format!("expected comparison, found {}", other.describe())),
        })
    }

    fn number(&mut self) -> Result<u64> {
        match self.bump() {
            Tok::Num(n) => Ok(n),
            Tok::LParen => {
                let n = self.number()?;
                self.expect(Tok::RParen)?;
                Ok(n)
            }
            other => self.err(format!("expected a number, found {}", other.describe())),
        }
    }

    // ---- propositional level ----

    fn prop(&mut self) -> Result<PropFormula> {
        let mut lhs = self.prop_implies()?;
        while self.eat(&Tok::DArrow) {
            let rhs = self.prop_implies()?;
            lhs = lhs.iff(rhs);
        }
        Ok(lhs)
    }

    fn prop_implies(&mut self) -> Result<PropFormula> {
        let lhs = self.prop_or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.prop_implies()?;
            return Ok(lhs.implies(rhs));
        }
        Ok(lhs)
    }

    fn prop_or(&mut self) -> Result<PropFormula> {
        let mut lhs = self.prop_and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.prop_and()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn prop_and(&mut self) -> Result<PropFormula> {
        let mut lhs = self.prop_unary()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.prop_unary()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn prop_unary(&mut self) -> Result<PropFormula> {
        let pos = self.pos();
        match self.bump() {
            Tok::Bang => Ok(self.prop_unary()?.not()),
            Tok::LParen => {
                let p = self.prop()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Num(0) => Ok(PropFormula::False),
            Tok::Num(1) => Ok(PropFormula::True),
            Tok::Ident(k) if k == "true" => Ok(PropFormula::True),
            Tok::Ident(k) if k == "false" => Ok(PropFormula::False),
            Tok::Ident(k) if !KEYWORDS.contains(&k.as_str()) => self.var(&k),
            other => Err(Error::Syntax {
                pos,
                msg: format!("expected a propositional formula, found {}", other.describe()),
            }),
        }
    }
}

/// Parses a QDDC formula using the built-in macros.
pub fn parse(text: &str, vars: &VarSet) -> Result<Qddc> {
    parse_with(text, vars, &builtin_macros())
}

pub fn parse_with(text: &str, vars: &VarSet, macros: &MacroTable) -> Result<Qddc> {
    parse_at(text, vars, macros, Pos { line: 1, col: 1 })
}

pub(crate) fn parse_at(text: &str, vars: &VarSet, macros: &MacroTable, origin: Pos) -> Result<Qddc> {
    let mut p = Parser {
        toks: lex(text, origin)?,
        i: 0,
        vars,
        bound: Vec::new(),
        macros,
        expansions: 0,
        nesting: 0,
    };
    let d = p.expr()?;
    if p.peek() != &Tok::Eof {
        return p.err(format!("unexpected {}", p.peek().describe()));
    }
    Ok(d)
}

/// Parses a purely propositional formula.
pub fn parse_prop(text: &str, vars: &VarSet) -> Result<PropFormula> {
    let macros = MacroTable::new();
    let mut p = Parser {
        toks: lex(text, Pos { line: 1, col: 1 })?,
        i: 0,
        vars,
        bound: Vec::new(),
        macros: &macros,
        expansions: 0,
        nesting: 0,
    };
    let f = p.prop()?;
    if p.peek() != &Tok::Eof {
        return p.err(format!("unexpected {}", p.peek().describe()));
    }
    Ok(f)
}
