//! S-expression concrete syntax for relational representations.
//!
//! ```text
//! ; comments run to end of line
//! :function MASS
//! :attribute YELLOW
//! :unordered AND
//! sun planet
//! (GREATER (MASS sun) (MASS planet))
//! ```
//!
//! Top-level bare symbols are entities. Heads default to ordered predicates;
//! the `:function`, `:attribute`, `:predicate`, `:unordered` and `:ordered`
//! markers override that for a symbol anywhere in the document.

use std::collections::HashMap;

use super::graph::{GraphBuilder, NodeId, NodeKind, RelGraph};
use super::IrError;

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
enum Token {
    Open(Pos),
    Close(Pos),
    Symbol(String, Pos),
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

/// A parsed expression before it is interned into a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fragment {
    Atom(String),
    List(String, Vec<Fragment>),
}

fn syntax(pos: Pos, msg: impl Into<String>) -> IrError {
    IrError::Syntax { line: pos.line, col: pos.col, msg: msg.into() }
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut chars = text.chars().peekable();
    let mut current: Option<(String, Pos)> = None;
    let flush = |cur: &mut Option<(String, Pos)>, out: &mut Vec<Token>| {
        if let Some((s, p)) = cur.take() {
            out.push(Token::Symbol(s, p));
        }
    };
    while let Some(c) = chars.next() {
        col += 1;
        let pos = Pos { line, col };
        match c {
            '(' => {
                flush(&mut current, &mut out);
                out.push(Token::Open(pos));
            }
            ')' => {
                flush(&mut current, &mut out);
                out.push(Token::Close(pos));
            }
            ';' => {
                flush(&mut current, &mut out);
                for d in chars.by_ref() {
                    if d == '\n' {
                        line += 1;
                        col = 0;
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                flush(&mut current, &mut out);
                if c == '\n' {
                    line += 1;
                    col = 0;
                }
            }
            c => match &mut current {
                Some((s, _)) => s.push(c),
                None => current = Some((c.to_string(), pos)),
            },
        }
    }
    flush(&mut current, &mut out);
    out
}

fn read_all(tokens: Vec<Token>) -> Result<Vec<Sexp>, IrError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    for tok in tokens {
        match tok {
            Token::Open(p) => stack.push((Vec::new(), p)),
            Token::Close(p) => {
                let (items, open) = stack.pop().ok_or_else(|| syntax(p, "unmatched `)`"))?;
                let list = Sexp::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => top.push(list),
                }
            }
            Token::Symbol(s, p) => {
                let atom = Sexp::Atom(s, p);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => top.push(atom),
                }
            }
        }
    }
    if let Some((_, p)) = stack.pop() {
        return Err(syntax(p, "unclosed `(`"));
    }
    Ok(top)
}

#[derive(Debug, Default, Clone, Copy)]
struct Decl {
    kind: Option<NodeKind>,
    unordered: Option<bool>,
}

/// Parses a document into a hash-consed graph.
pub fn parse_sexpr(text: &str) -> Result<RelGraph, IrError> {
    let items = read_all(tokenize(text))?;

    let mut decls: HashMap<String, Decl> = HashMap::new();
    let mut body = Vec::new();
    let mut iter = items.into_iter();
    while let Some(item) = iter.next() {
        match &item {
            Sexp::Atom(s, p) if s.starts_with(':') => {
                let target = match iter.next() {
                    Some(Sexp::Atom(sym, _)) if !sym.starts_with(':') => sym,
                    _ => return Err(syntax(*p, format!("`{s}` must be followed by a symbol"))),
                };
                let d = decls.entry(target).or_default();
                match s.as_str() {
                    ":function" => set_kind(d, NodeKind::Function, *p)?,
                    ":attribute" => set_kind(d, NodeKind::Attribute, *p)?,
                    ":predicate" | ":relation" => set_kind(d, NodeKind::Predicate, *p)?,
                    ":unordered" => d.unordered = Some(true),
                    ":ordered" => d.unordered = Some(false),
                    other => return Err(syntax(*p, format!("unknown marker `{other}`"))),
                }
            }
            _ => body.push(item),
        }
    }

    let mut builder = GraphBuilder::new();
    let mut heads: HashMap<String, Pos> = HashMap::new();
    let mut entities: HashMap<String, Pos> = HashMap::new();
    for item in &body {
        intern(item, &decls, &mut builder, &mut heads, &mut entities)?;
    }
    builder.build()
}

fn set_kind(d: &mut Decl, kind: NodeKind, p: Pos) -> Result<(), IrError> {
    match d.kind {
        Some(k) if k != kind => Err(syntax(p, format!("conflicting declarations {k:?} and {kind:?}"))),
        _ => {
            d.kind = Some(kind);
            Ok(())
        }
    }
}

fn intern(
    e: &Sexp,
    decls: &HashMap<String, Decl>,
    b: &mut GraphBuilder,
    heads: &mut HashMap<String, Pos>,
    entities: &mut HashMap<String, Pos>,
) -> Result<NodeId, IrError> {
    match e {
        Sexp::Atom(s, p) => {
            if s.starts_with(':') {
                return Err(syntax(*p, format!("marker `{s}` is only allowed at top level")));
            }
            if heads.contains_key(s) || decls.get(s).is_some_and(|d| d.kind.is_some()) {
                return Err(syntax(*p, format!("`{s}` is a relation symbol, not an entity")));
            }
            entities.entry(s.clone()).or_insert(*p);
            b.entity(s).map_err(|err| located(err, *p))
        }
        Sexp::List(items, p) => {
            let (head, rest) = match items.split_first() {
                Some((Sexp::Atom(h, _), rest)) if !rest.is_empty() => (h, rest),
                Some((Sexp::Atom(h, _), _)) => {
                    return Err(syntax(*p, format!("`{h}` applied to no arguments")))
                }
                Some((Sexp::List(..), _)) => return Err(syntax(*p, "head must be a symbol")),
                None => return Err(syntax(*p, "empty expression `()`")),
            };
            if entities.contains_key(head) {
                return Err(syntax(*p, format!("`{head}` is an entity, not a relation symbol")));
            }
            heads.entry(head.clone()).or_insert(*p);
            let mut args = Vec::with_capacity(rest.len());
            for a in rest {
                args.push(intern(a, decls, b, heads, entities)?);
            }
            let d = decls.get(head).copied().unwrap_or_default();
            let kind = d.kind.unwrap_or(NodeKind::Predicate);
            let ordered = !d.unordered.unwrap_or(false);
            b.add(head, kind, ordered, args).map(|(id, _)| id).map_err(|err| located(err, e.pos()))
        }
    }
}

fn located(err: IrError, p: Pos) -> IrError {
    match err {
        IrError::InvalidNode { reason, .. } => syntax(p, reason),
        IrError::ArityMismatch { symbol, expected, found } => syntax(
            p,
            format!("symbol `{symbol}` used as {found}, previously {expected}"),
        ),
        other => other,
    }
}

/// Parses one expression without building a graph (used for lookups).
pub fn parse_fragment(text: &str) -> Result<Fragment, IrError> {
    let mut items = read_all(tokenize(text))?;
    if items.len() != 1 {
        return Err(syntax(Pos { line: 1, col: 1 }, "expected exactly one expression"));
    }
    fn conv(e: Sexp) -> Result<Fragment, IrError> {
        match e {
            Sexp::Atom(s, _) => Ok(Fragment::Atom(s)),
            Sexp::List(items, p) => {
                let mut it = items.into_iter();
                let head = match it.next() {
                    Some(Sexp::Atom(h, _)) => h,
                    _ => return Err(syntax(p, "head must be a symbol")),
                };
                Ok(Fragment::List(head, it.map(conv).collect::<Result<_, _>>()?))
            }
        }
    }
    conv(items.remove(0))
}
