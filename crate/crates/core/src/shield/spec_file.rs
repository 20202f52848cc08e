//! Shield specification files.
//!
//! ```text
//! inputs: r
//! sse_outputs: p q
//! shield_outputs: p' q'
//! macro Resp(a, b) = [[a => b]]
//! req: phi_until(5)
//! shield_type: V3 e=1 d=2
//! dm: on
//! horizon: 10
//! order: !q' !p'
//! formula nodev = true^<!Deviation>
//! ```
//!
//! `#` starts a comment; an indented line continues the previous item.

use crate::error::{Error, Pos, Result};
use crate::prop::VarSet;
use crate::qddc::{builtin_macros, parse_at, MacroTable, Qddc};
use crate::synthesis::{Arith, OutputOrder};

use super::{hdc_vars, ShieldInterface, ShieldSpec, ShieldType};

#[derive(Clone, Debug)]
pub struct SpecFile {
    pub interface: ShieldInterface,
    pub req: Qddc,
    pub shield_type: ShieldType,
    pub dm: bool,
    pub horizon: usize,
    pub order: Option<OutputOrder>,
    pub macros: MacroTable,
    /// User formulas over `I ∪ O ∪ O' ∪ {SSEOK, Deviation}`.
    pub formulas: Vec<(String, Qddc)>,
}

impl SpecFile {
    pub fn to_spec(&self) -> Result<ShieldSpec> {
        let order = self
            .order
            .clone()
            .ok_or_else(|| Error::format("spec", "no output order given (`order:` or --order)"))?;
        let mut spec = ShieldSpec::new(self.interface.clone(), self.req.clone(), self.shield_type.clone(), order)?;
        spec.dm = self.dm;
        spec.horizon = self.horizon;
        spec.arith = Arith::Exact;
        Ok(spec)
    }

    /// `I ∪ O ∪ O' ∪ {SSEOK, Deviation}`.
    pub fn extended_vars(&self) -> Result<VarSet> {
        Ok(self.interface.ambient()?.union(&hdc_vars()))
    }

    /// Parses an extra formula over [`SpecFile::extended_vars`] with this
    /// file's macros.
    pub fn parse_formula(&self, text: &str) -> Result<Qddc> {
        parse_at(text, &self.extended_vars()?, &self.macros, Pos { line: 1, col: 1 })
    }

    /// Formula by name: `req`, `req_shield` (REQ over O'), `hdc`, or a
    /// `formula` entry.
    pub fn formula(&self, name: &str) -> Result<(Qddc, VarSet)> {
        match name {
            "req" => Ok((self.req.clone(), self.interface.sse_vars()?)),
            "req_shield" => Ok((self.interface.primed(&self.req), self.interface.ambient()?)),
            "hdc" => Ok((super::hdc_formula(&self.shield_type)?, hdc_vars())),
            _ => self
                .formulas
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, f)| Ok((f.clone(), self.extended_vars()?)))
                .unwrap_or_else(|| Err(Error::format("spec", format!("no formula named `{name}`")))),
        }
    }
}

struct Item {
    key: String,
    value: String,
    pos: Pos,
}

fn items(text: &str) -> Result<Vec<Item>> {
    let mut out: Vec<Item> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            match out.last_mut() {
                Some(it) => {
                    it.value.push('\n');
                    it.value.push_str(line);
                    continue;
                }
                None => return Err(syntax(no + 1, 1, "continuation line without an item")),
            }
        }
        let (key, value, col) = if let Some(rest) = line.strip_prefix("macro ") {
            ("macro".to_string(), rest.to_string(), 7)
        } else if let Some(rest) = line.strip_prefix("formula ") {
            ("formula".to_string(), rest.to_string(), 9)
        } else {
            let Some(colon) = line.find(':') else {
                return Err(syntax(no + 1, 1, "expected `key: value`"));
            };
            let value = &line[colon + 1..];
            let lead = value.len() - value.trim_start().len();
            (line[..colon].trim().to_string(), value.trim_start().to_string(), colon + 2 + lead)
        };
        out.push(Item {
            key,
            value,
            pos: Pos { line: no + 1, col },
        });
    }
    Ok(out)
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos: Pos { line, col },
        msg: msg.into(),
    }
}

fn names(v: &str) -> Vec<String> {
    v.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn number(it: &Item, v: &str) -> Result<u64> {
    v.trim()
        .parse()
        .map_err(|_| syntax(it.pos.line, it.pos.col, format!("`{}` is not a natural number", v.trim())))
}

/// `NAME(a, b) = body` → (name, params, body, body column offset).
fn macro_head(it: &Item) -> Result<(String, Vec<String>, String, usize)> {
    let eq = it
        .value
        .find('=')
        .ok_or_else(|| syntax(it.pos.line, it.pos.col, "expected `=` in definition"))?;
    let head = it.value[..eq].trim();
    let body = &it.value[eq + 1..];
    let lead = body.len() - body.trim_start().len();
    let (name, params) = match head.find('(') {
        Some(open) => {
            let close = head
                .rfind(')')
                .ok_or_else(|| syntax(it.pos.line, it.pos.col, "unclosed parameter list"))?;
            (head[..open].trim().to_string(), names(&head[open + 1..close]))
        }
        None => (head.to_string(), Vec::new()),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(syntax(it.pos.line, it.pos.col, format!("bad name `{name}`")));
    }
    Ok((name, params, body.trim_start().to_string(), it.pos.col + eq + 1 + lead))
}

fn shield_type(it: &Item, macros: &MacroTable) -> Result<ShieldType> {
    let v = it.value.trim();
    let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
    let param = |name: &str| -> Result<u64> {
        let tok = rest
            .split_whitespace()
            .find_map(|t| t.strip_prefix(name).and_then(|t| t.strip_prefix('=')))
            .ok_or_else(|| syntax(it.pos.line, it.pos.col, format!("{kind} needs `{name}=`")))?;
        number(it, tok)
    };
    Ok(match kind {
        "V0" => ShieldType::V0,
        "V1" => ShieldType::V1 { k: param("k")? },
        "V2" => ShieldType::V2 { k: param("k")? },
        "V3" => ShieldType::V3 {
            e: param("e")?,
            d: param("d")?,
        },
        "custom" => {
            let offset = it.value.find(rest.trim_start()).unwrap_or(0);
            let origin = Pos {
                line: it.pos.line,
                col: it.pos.col + offset,
            };
            ShieldType::Custom(parse_at(rest, &hdc_vars(), macros, origin)?)
        }
        other => return Err(syntax(it.pos.line, it.pos.col, format!("unknown shield type `{other}`"))),
    })
}

pub fn parse_spec(text: &str) -> Result<SpecFile> {
    let items = items(text)?;
    let get = |key: &str| items.iter().rev().find(|it| it.key == key);
    let required = |key: &str| get(key).ok_or_else(|| Error::format("spec", format!("missing `{key}:`")));
    for it in &items {
        if !matches!(
            it.key.as_str(),
            "inputs" | "sse_outputs" | "shield_outputs" | "req" | "shield_type" | "dm" | "horizon" | "order" | "macro"
                | "formula"
        ) {
            return Err(syntax(it.pos.line, 1, format!("unknown key `{}`", it.key)));
        }
    }
    let interface = ShieldInterface::new(
        &names(&required("inputs")?.value),
        &names(&required("sse_outputs")?.value),
        &names(&required("shield_outputs")?.value),
    )?;
    let mut macros = builtin_macros();
    for it in items.iter().filter(|it| it.key == "macro") {
        let (name, params, body, col) = macro_head(it)?;
        let ps: Vec<&str> = params.iter().map(String::as_str).collect();
        macros.define_at(&name, &ps, &body, Pos { line: it.pos.line, col })?;
    }
    let req_item = required("req")?;
    let req = parse_at(&req_item.value, &interface.sse_vars()?, &macros, req_item.pos)?;
    let shield_type = match get("shield_type") {
        Some(it) => shield_type(it, &macros)?,
        None => ShieldType::V0,
    };
    let dm = match get("dm").map(|it| (it, it.value.trim())) {
        None => true,
        Some((_, "on" | "true" | "yes")) => true,
        Some((_, "off" | "false" | "no")) => false,
        Some((it, v)) => return Err(syntax(it.pos.line, it.pos.col, format!("dm must be on or off, got `{v}`"))),
    };
    let horizon = match get("horizon") {
        Some(it) => number(it, &it.value)? as usize,
        None => 10,
    };
    let order = get("order").map(|it| OutputOrder::parse(&it.value)).transpose()?;
    let extended = interface.ambient()?.union(&hdc_vars());
    let mut formulas = Vec::new();
    for it in items.iter().filter(|it| it.key == "formula") {
        let (name, params, body, col) = macro_head(it)?;
        if !params.is_empty() {
            return Err(syntax(it.pos.line, it.pos.col, "formulas take no parameters; use `macro`"));
        }
        let f = parse_at(&body, &extended, &macros, Pos { line: it.pos.line, col })?;
        formulas.push((name, f));
    }
    Ok(SpecFile {
        interface,
        req,
        shield_type,
        dm,
        horizon,
        order,
        macros,
        formulas,
    })
}
