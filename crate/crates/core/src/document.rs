//! `.hbt` documents: ordered items with top-to-bottom rule scoping.
//!
//! The on-disk form is JSON with terms and rules stored as strings in the
//! concrete syntax; `docs/format.md` is the normative description. Documents
//! are parsed into elaborated items (terms as [`Term`]s, rules resolved) and
//! serialized back canonically: sorted keys, two-space indentation, a final
//! newline.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::induction::{InductionError, InductiveDef, Judgment};
use crate::proof::{CheckOptions, GoalPath, NodeError, ProofState, RuleScope, ScriptStep, Step};
use crate::rule::{NamedRule, Rule, RuleKind};
use crate::syntax::{parse_rule, parse_term, print_rule, print_term, DeclareError, NameEnv, Notation, ParseError};
use crate::term::{Name, Term, VarId, DEFAULT_FUEL};

/// Current format version.
pub const FORMAT_VERSION: u32 = 1;

/// Presentation preference for a proof. Never affects checking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    Tree,
    Prose,
    #[default]
    Hybrid,
    Linear,
    Vertical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem {
    pub statement: Arc<NamedRule>,
    pub script: Vec<ScriptStep>,
    pub style: Style,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Prose {
        text: String,
    },
    Axioms {
        rules: Vec<Arc<NamedRule>>,
    },
    /// Introduction rules; the derived rules are recomputed on load.
    Inductive {
        def: InductiveDef,
        derived: Vec<Arc<NamedRule>>,
    },
    Theorem(Theorem),
}

impl Item {
    /// Rules this item brings into scope for later items.
    pub fn exported_rules(&self) -> Vec<Arc<NamedRule>> {
        match self {
            Item::Prose { .. } => vec![],
            Item::Axioms { rules } => rules.clone(),
            Item::Inductive { def, derived } => def.intros.iter().cloned().map(Arc::new).chain(derived.iter().cloned()).collect(),
            Item::Theorem(t) => vec![t.statement.clone()],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Item::Prose { .. } => "prose",
            Item::Axioms { .. } => "axioms",
            Item::Inductive { .. } => "inductive",
            Item::Theorem(_) => "theorem",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Document {
    pub title: String,
    pub constants: Vec<String>,
    pub items: Vec<Item>,
    env: Arc<NameEnv>,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.title == other.title && self.constants == other.constants && self.items == other.items
    }
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("constant `{name}`: {source}")]
    Constant { name: String, source: DeclareError },
    #[error("item {item}, {location}: {source}")]
    Term { item: usize, location: String, source: ParseError },
    #[error("item {item}: binder `{name}` shadows a constant")]
    BinderShadowsConstant { item: usize, name: String },
    #[error("item {item}: statement of `{name}` mentions unification variables")]
    UnifVarInStatement { item: usize, name: String },
    #[error("item {item}: rule `{name}` is already defined")]
    DuplicateRuleName { item: usize, name: String },
    #[error("item {item}, step {step}: unknown rule `{name}`")]
    UnknownRuleReference { item: usize, step: usize, name: String },
    #[error("item {item}: judgment `{name}` is not a declared constant")]
    UndeclaredJudgment { item: usize, name: String },
    #[error("item {item}: {source}")]
    Induction { item: usize, source: InductionError },
}

impl DocumentError {
    pub fn code(&self) -> &'static str {
        match self {
            DocumentError::Syntax { .. } => "malformed",
            DocumentError::Version(_) => "version",
            DocumentError::Constant { .. } => "bad-constant",
            DocumentError::Term { .. } => "parse-error",
            DocumentError::BinderShadowsConstant { .. } => "binder-shadows-constant",
            DocumentError::UnifVarInStatement { .. } => "unification-variable",
            DocumentError::DuplicateRuleName { .. } => "duplicate-rule",
            DocumentError::UnknownRuleReference { .. } => "unknown-rule",
            DocumentError::UndeclaredJudgment { .. } => "undeclared-judgment",
            DocumentError::Induction { .. } => "induction",
        }
    }
}

// Raw serde shapes of the file format.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default)]
    title: String,
    version: u32,
    #[serde(default)]
    constants: Vec<String>,
    #[serde(default)]
    items: Vec<RawItem>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawItem {
    Prose {
        text: String,
    },
    Axioms {
        rules: Vec<RawRule>,
    },
    Inductive {
        judgments: Vec<Judgment>,
        rules: Vec<RawRule>,
    },
    Theorem {
        name: String,
        #[serde(default)]
        binders: Vec<String>,
        #[serde(default)]
        premises: Vec<String>,
        conclusion: String,
        #[serde(default)]
        script: Vec<ScriptStep>,
        #[serde(default)]
        style: Style,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    name: String,
    #[serde(default)]
    binders: Vec<String>,
    #[serde(default)]
    premises: Vec<String>,
    conclusion: String,
}

struct Elaborator {
    env: NameEnv,
    scope: RuleScope,
    item: usize,
}

impl Elaborator {
    fn rule(&self, name: &str, binders: &[String], premises: &[String], conclusion: &str) -> Result<Rule, DocumentError> {
        let item = self.item;
        for b in binders {
            if self.env.is_constant(b) {
                return Err(DocumentError::BinderShadowsConstant { item, name: b.clone() });
            }
        }
        let binders: Vec<Name> = binders.iter().map(|b| Name::from(b.as_str())).collect();
        let inner = self.env.with_binder_names(&binders);
        let premises = premises
            .iter()
            .enumerate()
            .map(|(i, p)| {
                parse_rule(p, &inner).map_err(|source| DocumentError::Term { item, location: format!("`{name}` premise {i}"), source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let conclusion = parse_term(conclusion, &inner).map_err(|source| DocumentError::Term {
            item,
            location: format!("`{name}` conclusion"),
            source,
        })?;
        let rule = Rule { binders, premises, conclusion };
        if !rule.unif_vars().is_empty() {
            return Err(DocumentError::UnifVarInStatement { item, name: name.to_string() });
        }
        Ok(rule)
    }

    fn named(&self, raw: &RawRule, kind: RuleKind) -> Result<NamedRule, DocumentError> {
        let rule = self.rule(&raw.name, &raw.binders, &raw.premises, &raw.conclusion)?;
        Ok(NamedRule::new(raw.name.clone(), rule, kind))
    }

    fn export(&mut self, rules: impl IntoIterator<Item = Arc<NamedRule>>) -> Result<(), DocumentError> {
        for r in rules {
            self.scope.add(r).map_err(|e| DocumentError::DuplicateRuleName { item: self.item, name: e.0 })?;
        }
        Ok(())
    }

    fn check_references(&self, script: &[ScriptStep]) -> Result<(), DocumentError> {
        for (step, s) in script.iter().enumerate() {
            let name = match &s.step {
                Step::Intro { rule } | Step::Elim { rule, .. } => Some(rule),
                Step::Rewrite { rule, .. } => rule.as_ref(),
                Step::Assumption { .. } | Step::Refl => None,
            };
            if let Some(name) = name {
                if !self.scope.contains(name) {
                    return Err(DocumentError::UnknownRuleReference { item: self.item, step, name: name.clone() });
                }
            }
        }
        Ok(())
    }

    fn item(&mut self, raw: RawItem) -> Result<Item, DocumentError> {
        let item = match raw {
            RawItem::Prose { text } => Item::Prose { text },
            RawItem::Axioms { rules } => {
                let rules = rules.iter().map(|r| self.named(r, RuleKind::Axiom).map(Arc::new)).collect::<Result<Vec<_>, _>>()?;
                Item::Axioms { rules }
            }
            RawItem::Inductive { judgments, rules } => {
                for j in &judgments {
                    if !self.env.is_constant(&j.name) {
                        return Err(DocumentError::UndeclaredJudgment { item: self.item, name: j.name.clone() });
                    }
                }
                let intros = rules.iter().map(|r| self.named(r, RuleKind::Intro)).collect::<Result<Vec<_>, _>>()?;
                let def = InductiveDef::new(judgments, intros);
                let derived = def
                    .derived_rules()
                    .map_err(|source| DocumentError::Induction { item: self.item, source })?
                    .into_iter()
                    .map(Arc::new)
                    .collect();
                Item::Inductive { def, derived }
            }
            RawItem::Theorem { name, binders, premises, conclusion, script, style } => {
                let rule = self.rule(&name, &binders, &premises, &conclusion)?;
                self.check_references(&script)?;
                let statement = Arc::new(NamedRule::new(name, rule, RuleKind::Theorem));
                Item::Theorem(Theorem { statement, script, style })
            }
        };
        self.export(item.exported_rules())?;
        Ok(item)
    }
}

/// Parses and elaborates a document.
pub fn parse_document(src: &str) -> Result<Document, DocumentError> {
    let raw: RawDocument =
        serde_json::from_str(src).map_err(|e| DocumentError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    if raw.version != FORMAT_VERSION {
        return Err(DocumentError::Version(raw.version));
    }
    let mut env = NameEnv::new();
    for c in &raw.constants {
        if env.is_constant(c) {
            let source = DeclareError::AlreadyDeclared(c.clone());
            return Err(DocumentError::Constant { name: c.clone(), source });
        }
        env.declare(c).map_err(|source| DocumentError::Constant { name: c.clone(), source })?;
    }
    let mut el = Elaborator { env, scope: RuleScope::new(), item: 0 };
    let mut items = Vec::with_capacity(raw.items.len());
    for (i, it) in raw.items.into_iter().enumerate() {
        el.item = i;
        items.push(el.item(it)?);
    }
    Ok(Document { title: raw.title, constants: raw.constants, items, env: Arc::new(el.env) })
}

fn rule_value(env: &NameEnv, name: &str, rule: &Rule) -> Value {
    let inner = env.with_binder_names(&rule.binders);
    json!({
        "name": name,
        "binders": rule.binders.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
        "premises": rule.premises.iter().map(|p| print_rule(p, &inner, Notation::Infix)).collect::<Vec<_>>(),
        "conclusion": print_term(&rule.conclusion, &inner, Notation::Infix),
    })
}

impl Document {
    pub fn empty(title: &str) -> Self {
        Document { title: title.to_string(), constants: vec![], items: vec![], env: Arc::new(NameEnv::new()) }
    }

    /// Constants declared by the document, plus the built-in equality.
    pub fn env(&self) -> &Arc<NameEnv> {
        &self.env
    }

    /// Rules visible to item `index` (everything exported before it).
    pub fn scope_at(&self, index: usize) -> RuleScope {
        let mut scope = RuleScope::new();
        for item in self.items.iter().take(index) {
            for r in item.exported_rules() {
                // Names were checked unique when the document was parsed.
                let _ = scope.add(r);
            }
        }
        scope
    }

    /// Index of the theorem called `name`.
    pub fn theorem_index(&self, name: &str) -> Option<usize> {
        self.items.iter().position(|it| matches!(it, Item::Theorem(t) if t.statement.name == name))
    }

    pub fn theorems(&self) -> impl Iterator<Item = (usize, &Theorem)> {
        self.items.iter().enumerate().filter_map(|(i, it)| match it {
            Item::Theorem(t) => Some((i, t)),
            _ => None,
        })
    }

    /// A fresh proof of the theorem at `index`, with the scope of that item.
    pub fn start_proof(&self, index: usize, fuel: usize) -> Option<ProofState> {
        let Item::Theorem(t) = self.items.get(index)? else { return None };
        Some(ProofState::with_fuel(t.statement.clone(), Arc::new(self.scope_at(index)), self.env.clone(), fuel))
    }

    /// Replaces the script of the theorem at `index`.
    pub fn set_script(&mut self, index: usize, script: Vec<ScriptStep>) -> bool {
        match self.items.get_mut(index) {
            Some(Item::Theorem(t)) => {
                t.script = script;
                true
            }
            _ => false,
        }
    }

    pub fn to_value(&self) -> Value {
        let env = &self.env;
        let items: Vec<Value> = self
            .items
            .iter()
            .map(|item| match item {
                Item::Prose { text } => json!({ "kind": "prose", "text": text }),
                Item::Axioms { rules } => json!({
                    "kind": "axioms",
                    "rules": rules.iter().map(|r| rule_value(env, &r.name, &r.rule)).collect::<Vec<_>>(),
                }),
                Item::Inductive { def, .. } => json!({
                    "kind": "inductive",
                    "judgments": def.judgments,
                    "rules": def.intros.iter().map(|r| rule_value(env, &r.name, &r.rule)).collect::<Vec<_>>(),
                }),
                Item::Theorem(t) => {
                    let mut v = rule_value(env, &t.statement.name, &t.statement.rule);
                    let obj = v.as_object_mut().expect("object");
                    obj.insert("kind".into(), json!("theorem"));
                    obj.insert("script".into(), serde_json::to_value(&t.script).expect("script serializes"));
                    obj.insert("style".into(), serde_json::to_value(t.style).expect("style serializes"));
                    v
                }
            })
            .collect();
        json!({
            "title": self.title,
            "version": FORMAT_VERSION,
            "constants": self.constants,
            "items": items,
        })
    }
}

/// Canonical text of a document.
pub fn serialize_document(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(&doc.to_value()).expect("values serialize");
    s.push('\n');
    s
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_document(self))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Complete,
    Incomplete,
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Complete => "complete",
            Status::Incomplete => "incomplete",
            Status::Error => "error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremReport {
    pub item: usize,
    pub name: String,
    pub status: Status,
    pub errors: Vec<NodeError>,
    pub unsolved: Vec<GoalPath>,
    pub unresolved: Vec<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentReport {
    pub theorems: Vec<TheoremReport>,
}

impl DocumentReport {
    pub fn count(&self, status: Status) -> usize {
        self.theorems.iter().filter(|t| t.status == status).count()
    }

    pub fn all_complete(&self) -> bool {
        self.theorems.iter().all(|t| t.status == Status::Complete)
    }

    /// `"4 theorems, 4 complete"`, with incomplete and failing counts when
    /// non-zero.
    pub fn summary(&self) -> String {
        let n = self.theorems.len();
        let mut s = format!("{n} theorem{}, {} complete", if n == 1 { "" } else { "s" }, self.count(Status::Complete));
        for status in [Status::Incomplete, Status::Error] {
            let k = self.count(status);
            if k > 0 {
                s.push_str(&format!(", {k} {status}"));
            }
        }
        s
    }
}

/// Settings for [`check_document`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub fuel: usize,
    pub options: CheckOptions,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { fuel: DEFAULT_FUEL, options: CheckOptions::default() }
    }
}

/// Replays every theorem's script under the scope of its item.
pub fn check_document(doc: &Document, config: &CheckConfig) -> DocumentReport {
    let theorems = doc
        .theorems()
        .map(|(index, t)| {
            let state = doc.start_proof(index, config.fuel).expect("theorem item");
            let (done, errors) = state.replay(&t.script);
            let unsolved = done.unsolved();
            let unresolved: Vec<VarId> = done.tree().unif_vars().into_iter().collect();
            let status = if !errors.is_empty() {
                Status::Error
            } else if !unsolved.is_empty() || (config.options.strict_unifvars && !unresolved.is_empty()) {
                Status::Incomplete
            } else {
                Status::Complete
            };
            TheoremReport { item: index, name: t.statement.name.clone(), status, errors, unsolved, unresolved }
        })
        .collect();
    DocumentReport { theorems }
}

/// Parses a term under the document's constants and `binders`.
pub fn parse_term_in(doc: &Document, src: &str, binders: &[String]) -> Result<Term, ParseError> {
    let names: Vec<Name> = binders.iter().map(|b| Name::from(b.as_str())).collect();
    parse_term(src, &doc.env.with_binder_names(&names))
}
