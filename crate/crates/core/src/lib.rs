//! Kernel of a small proof assistant for untyped higher-order logic.
//!
//! Terms use de Bruijn indices ([`term`]), goals are discharged by higher-order
//! pattern unification ([`unify`]) against rules in hereditary Harrop form
//! ([`rule`]). Proofs are goal trees ([`proof`]); inductive definitions yield
//! derived case-analysis and induction rules ([`induction`]); whole developments
//! are stored as `.hbt` documents ([`document`]).

pub mod document;
pub mod induction;
pub mod proof;
pub mod rule;
pub mod syntax;
pub mod term;
pub mod unify;

/// Name of the built-in equality constant.
pub const EQUALS: &str = "_=_";
/// Name of the built-in reflexivity rule.
pub const REFL: &str = "refl";

pub use document::{
    check_document, parse_document, serialize_document, CheckConfig, Document, DocumentError, DocumentReport, Item, Status, Style, Theorem,
    TheoremReport, FORMAT_VERSION,
};
pub use induction::{InductionError, InductiveDef, Judgment};
pub use proof::{
    ApplyError, CheckOptions, CheckReport, Direction, Equation, Goal, GoalPath, GoalSummary, NodeError, ProofState, ProofTree, RuleScope,
    ScriptStep, Step,
};
pub use rule::{
    instantiate, instantiate_two_phase, is_introduction_format, InstantiatedRule, NamedRule, PartialInstantiation, Rule, RuleKind,
};
pub use syntax::{parse_rule, parse_term, print_rule, print_term, Fixity, NameEnv, Notation, ParseError, ParseErrorKind};
pub use term::{alpha_beta_eta_equal, Name, NormalizeError, Term, TermError, VarId, DEFAULT_FUEL};
pub use unify::{apply_subst, compose, unify, FreshIds, Substitution, Unifier, UnifyError};
