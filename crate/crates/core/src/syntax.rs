//! Concrete syntax for terms and rules.
//!
//! Terms: application by juxtaposition, abstraction written `(x y. body)`
//! without a λ, and infix/postfix use of constants whose names are `_`-hole
//! patterns (`_/\_`, `_ℕ`). Rules: `A B. premise, [x. hyp |- goal] |- concl`.
//! The full grammar lives in `docs/grammar.md`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::rule::Rule;
use crate::term::{Name, Term, VarId};

const MAX_NESTING: usize = 256;

/// How a declared constant is written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fixity {
    Prefix,
    /// `_op_`: binary, written between its arguments.
    Infix(Name),
    /// `_op`: unary, written after its argument.
    Postfix(Name),
}

impl Fixity {
    /// Reads the fixity off a constant's name.
    pub fn of_name(name: &str) -> Fixity {
        if name.len() >= 3 && name.starts_with('_') && name.ends_with('_') {
            let op = &name[1..name.len() - 1];
            if !op.contains('_') {
                return Fixity::Infix(Name::from(op));
            }
        }
        if name.len() >= 2 && name.starts_with('_') {
            let op = &name[1..];
            if !op.contains('_') {
                return Fixity::Postfix(Name::from(op));
            }
        }
        Fixity::Prefix
    }

    fn arity(&self) -> usize {
        match self {
            Fixity::Prefix => 0,
            Fixity::Infix(_) => 2,
            Fixity::Postfix(_) => 1,
        }
    }
}

/// Whether mixfix constants are printed in their declared form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Notation {
    Prefix,
    #[default]
    Infix,
}

/// Names in scope: the binder stack used to read and print bound variables,
/// and the table of declared constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameEnv {
    binders: Vec<Name>,
    constants: BTreeMap<Name, Fixity>,
    operators: BTreeMap<Name, (Name, Fixity)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeclareError {
    #[error("`{0}` is not a valid constant name")]
    InvalidName(String),
    #[error("operator `{op}` of `{name}` is already used by `{other}`")]
    OperatorClash { name: String, op: String, other: String },
    #[error("`{0}` is already declared")]
    AlreadyDeclared(String),
}

impl Default for NameEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl NameEnv {
    /// An environment holding only the built-in equality `_=_`.
    pub fn new() -> Self {
        let mut env = NameEnv { binders: vec![], constants: BTreeMap::new(), operators: BTreeMap::new() };
        env.declare(crate::EQUALS).expect("builtin equality");
        env
    }

    pub fn declare(&mut self, name: &str) -> Result<(), DeclareError> {
        if !is_word(name) || name.starts_with('?') || is_reserved(name) {
            return Err(DeclareError::InvalidName(name.to_string()));
        }
        if self.constants.contains_key(name) {
            return Ok(());
        }
        let fixity = Fixity::of_name(name);
        if let Fixity::Infix(op) | Fixity::Postfix(op) = &fixity {
            if is_reserved(op) {
                return Err(DeclareError::InvalidName(name.to_string()));
            }
            if let Some((other, _)) = self.operators.get(op) {
                return Err(DeclareError::OperatorClash { name: name.to_string(), op: op.to_string(), other: other.to_string() });
            }
            if self.constants.contains_key(&**op) {
                return Err(DeclareError::OperatorClash { name: name.to_string(), op: op.to_string(), other: op.to_string() });
            }
            self.operators.insert(op.clone(), (Name::from(name), fixity.clone()));
        } else if let Some((other, _)) = self.operators.get(name) {
            // The lexer would read the name as the operator.
            return Err(DeclareError::OperatorClash { name: name.to_string(), op: name.to_string(), other: other.to_string() });
        }
        self.constants.insert(Name::from(name), fixity);
        Ok(())
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains_key(name)
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.constants.keys().map(|k| &**k)
    }

    pub fn fixity(&self, name: &str) -> Option<&Fixity> {
        self.constants.get(name)
    }

    pub fn binders(&self) -> &[Name] {
        &self.binders
    }

    pub fn push_binder(&mut self, name: &str) {
        self.binders.push(Name::from(name));
    }

    pub fn pop_binder(&mut self) {
        self.binders.pop();
    }

    /// The same constants with `names` (outermost first) as binder stack.
    pub fn with_binders<'a>(&self, names: impl IntoIterator<Item = &'a str>) -> NameEnv {
        NameEnv {
            binders: names.into_iter().map(Name::from).collect(),
            constants: self.constants.clone(),
            operators: self.operators.clone(),
        }
    }

    pub fn with_binder_names(&self, names: &[Name]) -> NameEnv {
        NameEnv { binders: names.to_vec(), constants: self.constants.clone(), operators: self.operators.clone() }
    }

    fn operator(&self, word: &str) -> Option<&(Name, Fixity)> {
        self.operators.get(word)
    }

    /// A variant of `hint` clashing with no binder in `taken`, no constant and
    /// no operator.
    pub fn fresh_name(&self, hint: &str, taken: &[Name]) -> Name {
        let mut name = if is_word(hint) && !hint.starts_with('?') && !is_reserved(hint) { hint.to_string() } else { "x".to_string() };
        while taken.iter().any(|t| **t == *name) || self.constants.contains_key(name.as_str()) || self.operators.contains_key(name.as_str())
        {
            name.push('\'');
        }
        Name::from(name)
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '.' | ',')
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(is_separator)
}

fn is_reserved(s: &str) -> bool {
    matches!(s, "|-" | "⊢")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("unexpected `{found}`, expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEnd(&'static str),
    #[error("operators `{0}` and `{1}` need parentheses when mixed")]
    MixedOperators(String, String),
    #[error("`{0}` cannot be used as a binder name")]
    InvalidBinder(String),
    #[error("nesting too deep")]
    TooDeep,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Comma,
    Turnstile,
    Word(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBracket => f.write_str("["),
            Tok::RBracket => f.write_str("]"),
            Tok::Dot => f.write_str("."),
            Tok::Comma => f.write_str(","),
            Tok::Turnstile => f.write_str("|-"),
            Tok::Word(w) => f.write_str(w),
        }
    }
}

fn lex(src: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let tok = match c {
            c if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '.' => Tok::Dot,
            ',' => Tok::Comma,
            _ => {
                let mut end = i;
                while let Some(&(j, d)) = chars.peek() {
                    if is_separator(d) {
                        break;
                    }
                    end = j + d.len_utf8();
                    chars.next();
                }
                let word = &src[i..end];
                out.push((i, if is_reserved(word) { Tok::Turnstile } else { Tok::Word(word.to_string()) }));
                continue;
            }
        };
        chars.next();
        out.push((i, tok));
    }
    out
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    env: &'a NameEnv,
    scope: Vec<Name>,
    nesting: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &str, env: &'a NameEnv) -> Self {
        Parser { toks: lex(src), pos: 0, end: src.len(), env, scope: env.binders.clone(), nesting: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.offset(), kind }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::Unexpected { found: t.to_string(), expected }),
            None => self.err(ParseErrorKind::UnexpectedEnd(expected)),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> PResult<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn finish(&self) -> PResult<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(self.err(ParseErrorKind::TooDeep));
        }
        Ok(())
    }

    /// A run of words followed by a dot starting `k` tokens ahead.
    fn binders_ahead(&self, k: usize) -> bool {
        let mut i = k;
        while let Some(Tok::Word(_)) = self.peek_at(i) {
            i += 1;
        }
        i > k && self.peek_at(i) == Some(&Tok::Dot)
    }

    fn binder_list(&mut self) -> PResult<Vec<Name>> {
        let mut names = Vec::new();
        while let Some(Tok::Word(w)) = self.peek() {
            if w.starts_with('?') || self.env.operator(w).is_some() {
                return Err(self.err(ParseErrorKind::InvalidBinder(w.clone())));
            }
            names.push(Name::from(w.as_str()));
            self.pos += 1;
        }
        self.expect(Tok::Dot, "`.`")?;
        Ok(names)
    }

    fn is_operator(&self, tok: Option<&Tok>) -> bool {
        matches!(tok, Some(Tok::Word(w)) if self.env.operator(w).is_some())
    }

    fn term(&mut self) -> PResult<Term> {
        let first = self.postfix()?;
        let mut operands = vec![first];
        let mut chain_op: Option<(String, Name)> = None;
        while let Some(Tok::Word(w)) = self.peek() {
            let Some((name, Fixity::Infix(_))) = self.env.operator(w) else { break };
            let w = w.clone();
            if let Some((seen, _)) = &chain_op {
                if *seen != w {
                    return Err(self.err(ParseErrorKind::MixedOperators(seen.clone(), w)));
                }
            }
            chain_op = Some((w, name.clone()));
            self.pos += 1;
            operands.push(self.postfix()?);
        }
        let Some((_, name)) = chain_op else { return Ok(operands.pop().expect("one operand")) };
        let mut acc = operands.pop().expect("right operand");
        while let Some(left) = operands.pop() {
            acc = Term::apps(Term::Const(name.clone()), [left, acc]);
        }
        Ok(acc)
    }

    fn postfix(&mut self) -> PResult<Term> {
        let mut t = self.application()?;
        while let Some(Tok::Word(w)) = self.peek() {
            let Some((name, Fixity::Postfix(_))) = self.env.operator(w) else { break };
            t = Term::app(Term::Const(name.clone()), t);
            self.pos += 1;
        }
        Ok(t)
    }

    fn application(&mut self) -> PResult<Term> {
        let mut t = self.atom()?;
        loop {
            match self.peek() {
                Some(Tok::LParen) => {}
                tok @ Some(Tok::Word(_)) if !self.is_operator(tok) => {}
                _ => return Ok(t),
            }
            t = Term::app(t, self.atom()?);
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) => {
                if self.env.operator(&w).is_some() {
                    return Err(self.unexpected("a term"));
                }
                let t = self.resolve(&w)?;
                self.pos += 1;
                Ok(t)
            }
            Some(Tok::LParen) => {
                self.enter()?;
                self.pos += 1;
                let t = if self.binders_ahead(0) {
                    let names = self.binder_list()?;
                    let n = names.len();
                    self.scope.extend(names.iter().cloned());
                    let body = self.term();
                    self.scope.truncate(self.scope.len() - n);
                    Term::lams(&names, body?)
                } else {
                    self.term()?
                };
                self.expect(Tok::RParen, "`)`")?;
                self.nesting -= 1;
                Ok(t)
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn resolve(&self, word: &str) -> PResult<Term> {
        if let Some(pos) = self.scope.iter().rposition(|b| **b == *word) {
            return Ok(Term::Bound(self.scope.len() - 1 - pos));
        }
        if self.env.is_constant(word) {
            return Ok(Term::Const(Name::from(word)));
        }
        if let Some(digits) = word.strip_prefix('?') {
            if let Ok(id) = digits.parse::<u32>() {
                return Ok(Term::UnifVar(VarId(id)));
            }
        }
        Err(self.err(ParseErrorKind::UnboundIdentifier(word.to_string())))
    }

    fn rule(&mut self) -> PResult<Rule> {
        let binders = if self.binders_ahead(0) { self.binder_list()? } else { vec![] };
        let n = binders.len();
        self.scope.extend(binders.iter().cloned());
        let body = self.rule_body();
        self.scope.truncate(self.scope.len() - n);
        let (premises, conclusion) = body?;
        Ok(Rule { binders, premises, conclusion })
    }

    fn rule_body(&mut self) -> PResult<(Vec<Rule>, Term)> {
        if self.peek() == Some(&Tok::Turnstile) {
            self.pos += 1;
            return Ok((vec![], self.term()?));
        }
        let mut premises = Vec::new();
        loop {
            let bracketed = self.peek() == Some(&Tok::LBracket);
            let premise = if bracketed {
                self.enter()?;
                self.pos += 1;
                let r = self.rule()?;
                self.expect(Tok::RBracket, "`]`")?;
                self.nesting -= 1;
                r
            } else {
                Rule::fact(self.term()?)
            };
            premises.push(premise);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::Turnstile) => {
                    self.pos += 1;
                    return Ok((premises, self.term()?));
                }
                _ if premises.len() == 1 && !bracketed => {
                    let only = premises.pop().expect("single term");
                    return Ok((vec![], only.conclusion));
                }
                _ => return Err(self.unexpected("`,` or `|-`")),
            }
        }
    }
}

/// Parses a term under the binders and constants of `env`.
pub fn parse_term(src: &str, env: &NameEnv) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, env);
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// Parses a rule `binders. premises |- conclusion` under `env`.
pub fn parse_rule(src: &str, env: &NameEnv) -> Result<Rule, ParseError> {
    let mut p = Parser::new(src, env);
    let r = p.rule()?;
    p.finish()?;
    Ok(r)
}

/// Parses a list of binder names (`A B C`).
pub fn parse_binders(src: &str) -> Result<Vec<Name>, ParseError> {
    let toks = lex(src);
    let mut out = Vec::new();
    for (offset, tok) in toks {
        match tok {
            Tok::Word(w) if !w.starts_with('?') => out.push(Name::from(w.as_str())),
            other => {
                return Err(ParseError { offset, kind: ParseErrorKind::Unexpected { found: other.to_string(), expected: "a binder name" } })
            }
        }
    }
    Ok(out)
}

struct Printer<'a> {
    env: &'a NameEnv,
    names: Vec<Name>,
    notation: Notation,
    out: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Position {
    /// Anything goes without parentheses.
    Top,
    /// Operand or argument: only atoms and abstractions go bare.
    Argument,
}

impl<'a> Printer<'a> {
    fn new(env: &'a NameEnv, notation: Notation) -> Self {
        Printer { env, names: env.binders.clone(), notation, out: String::new() }
    }

    fn name_of(&self, i: usize) -> String {
        match self.names.len().checked_sub(i + 1) {
            Some(p) => self.names[p].to_string(),
            None => format!("#{i}"),
        }
    }

    fn bind(&mut self, hint: &str) -> Name {
        let name = self.env.fresh_name(hint, &self.names);
        self.names.push(name.clone());
        name
    }

    fn term(&mut self, t: &Term, pos: Position) {
        match t {
            Term::Bound(i) => {
                let n = self.name_of(*i);
                self.out.push_str(&n);
            }
            Term::Const(c) => self.out.push_str(c),
            Term::UnifVar(v) => {
                use std::fmt::Write;
                let _ = write!(self.out, "{v}");
            }
            Term::Lam(..) => self.lambda(t),
            Term::App(..) => {
                let (head, args) = t.spine();
                if pos == Position::Argument {
                    self.out.push('(');
                }
                if !self.mixfix(head, &args) {
                    match head {
                        Term::Lam(..) => self.lambda(head),
                        _ => self.term(head, Position::Argument),
                    }
                    for a in args {
                        self.out.push(' ');
                        self.term(a, Position::Argument);
                    }
                }
                if pos == Position::Argument {
                    self.out.push(')');
                }
            }
        }
    }

    fn mixfix(&mut self, head: &Term, args: &[&Term]) -> bool {
        if self.notation == Notation::Prefix {
            return false;
        }
        let Term::Const(c) = head else { return false };
        let Some(fixity) = self.env.fixity(c) else { return false };
        if fixity.arity() == 0 || fixity.arity() != args.len() {
            return false;
        }
        match fixity {
            Fixity::Infix(op) => {
                self.term(args[0], Position::Argument);
                self.out.push(' ');
                self.out.push_str(op);
                self.out.push(' ');
                self.term(args[1], Position::Argument);
            }
            Fixity::Postfix(op) => {
                self.term(args[0], Position::Argument);
                self.out.push(' ');
                self.out.push_str(op);
            }
            Fixity::Prefix => unreachable!(),
        }
        true
    }

    fn lambda(&mut self, t: &Term) {
        self.out.push('(');
        let mut body = t;
        let mut bound = 0;
        while let Term::Lam(h, b) = body {
            if bound > 0 {
                self.out.push(' ');
            }
            let name = self.bind(h);
            self.out.push_str(&name);
            bound += 1;
            body = b;
        }
        self.out.push_str(". ");
        self.term(body, Position::Top);
        self.names.truncate(self.names.len() - bound);
        self.out.push(')');
    }

    fn rule(&mut self, r: &Rule) {
        let n = r.binders.len();
        for (i, b) in r.binders.iter().enumerate() {
            if i > 0 {
                self.out.push(' ');
            }
            let name = self.bind(b);
            self.out.push_str(&name);
        }
        if n > 0 {
            self.out.push_str(". ");
        }
        for (i, p) in r.premises.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            if p.is_fact() {
                self.term(&p.conclusion, Position::Top);
            } else {
                self.out.push('[');
                self.rule(p);
                self.out.push(']');
            }
        }
        if !r.premises.is_empty() {
            self.out.push_str(" |- ");
        } else if n > 0 {
            self.out.push_str("|- ");
        }
        self.term(&r.conclusion, Position::Top);
        self.names.truncate(self.names.len() - n);
    }
}

/// Prints a term; bound variables take their names from `env`'s binder stack.
pub fn print_term(t: &Term, env: &NameEnv, notation: Notation) -> String {
    let mut p = Printer::new(env, notation);
    p.term(t, Position::Top);
    p.out
}

pub fn print_rule(r: &Rule, env: &NameEnv, notation: Notation) -> String {
    let mut p = Printer::new(env, notation);
    p.rule(r);
    p.out
}
