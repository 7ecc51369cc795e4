//! Hereditary Harrop rules and their instantiation with unification variables.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::term::{BinderImage, Name, NormalizeError, Term, VarId};
use crate::unify::{FreshIds, Substitution};

/// `binders. premises ⊢ conclusion`.
///
/// Premises and conclusion are scoped under the ambient context followed by
/// `binders` (the last binder is index 0). Premises are rules themselves, so
/// their own binders extend the scope further.
#[derive(Clone, Debug)]
pub struct Rule {
    pub binders: Vec<Name>,
    pub premises: Vec<Rule>,
    pub conclusion: Term,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.binders.len() == other.binders.len() && self.premises == other.premises && self.conclusion == other.conclusion
    }
}

impl Eq for Rule {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    Axiom,
    Theorem,
    /// An introduction rule of an inductive definition.
    Intro,
    DerivedCases,
    DerivedInduction,
    BuiltinRefl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedRule {
    pub name: String,
    pub rule: Rule,
    pub kind: RuleKind,
}

impl NamedRule {
    pub fn new(name: impl Into<String>, rule: Rule, kind: RuleKind) -> Self {
        NamedRule { name: name.into(), rule, kind }
    }

    /// The built-in reflexivity axiom `x. ⊢ x = x`.
    pub fn refl() -> Arc<NamedRule> {
        let eq = Term::apps(Term::constant(crate::EQUALS), [Term::Bound(0), Term::Bound(0)]);
        Arc::new(NamedRule::new(
            crate::REFL,
            Rule { binders: vec![Name::from("x")], premises: vec![], conclusion: eq },
            RuleKind::BuiltinRefl,
        ))
    }
}

/// A rule whose binders have all been replaced by unification variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstantiatedRule {
    pub premises: Vec<Rule>,
    pub conclusion: Term,
    pub introduced: Vec<VarId>,
}

impl Rule {
    /// A premise-free, binder-free rule.
    pub fn fact(conclusion: Term) -> Rule {
        Rule { binders: vec![], premises: vec![], conclusion }
    }

    pub fn is_fact(&self) -> bool {
        self.binders.is_empty() && self.premises.is_empty()
    }

    /// Applies `f` to every term in the rule together with the number of
    /// binders between it and the rule's ambient context.
    pub fn map_terms<E>(&self, f: &mut impl FnMut(&Term, usize) -> Result<Term, E>) -> Result<Rule, E> {
        self.map_terms_at(0, f)
    }

    fn map_terms_at<E>(&self, local: usize, f: &mut impl FnMut(&Term, usize) -> Result<Term, E>) -> Result<Rule, E> {
        let inner = local + self.binders.len();
        let premises = self.premises.iter().map(|p| p.map_terms_at(inner, f)).collect::<Result<_, _>>()?;
        Ok(Rule { binders: self.binders.clone(), premises, conclusion: f(&self.conclusion, inner)? })
    }

    /// Visits every term with its binder depth relative to the rule's context.
    pub fn for_each_term(&self, f: &mut impl FnMut(&Term, usize)) {
        self.for_each_term_at(0, f)
    }

    fn for_each_term_at(&self, local: usize, f: &mut impl FnMut(&Term, usize)) {
        let inner = local + self.binders.len();
        for p in &self.premises {
            p.for_each_term_at(inner, f);
        }
        f(&self.conclusion, inner);
    }

    pub fn shift_up(&self, amount: usize, cutoff: usize) -> Rule {
        let r: Result<Rule, std::convert::Infallible> = self.map_terms(&mut |t, local| Ok(t.shift_up(amount, cutoff + local)));
        match r {
            Ok(r) => r,
            Err(e) => match e {},
        }
    }

    pub fn shift(&self, amount: isize, cutoff: usize) -> Result<Rule, crate::term::TermError> {
        self.map_terms(&mut |t, local| t.shift(amount, cutoff + local))
    }

    /// Smallest ambient depth under which the rule is well-scoped.
    pub fn scope_depth(&self) -> usize {
        let mut depth = 0;
        self.for_each_term(&mut |t, local| depth = depth.max(t.scope_depth().saturating_sub(local)));
        depth
    }

    /// Ambient variables (indices relative to the rule's context) that occur
    /// anywhere in the rule.
    pub fn free_bound(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t, local| out.extend(t.free_bound().into_iter().filter(|i| *i >= local).map(|i| i - local)));
        out
    }

    pub fn unif_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.for_each_term(&mut |t, _| t.collect_vars(&mut out));
        out
    }

    pub fn mentions_const(&self, name: &str) -> bool {
        let mut found = false;
        self.for_each_term(&mut |t, _| found |= t.mentions_const(name));
        found
    }

    /// Rewrites the rule's own binders; see [`Term::replace_binders`].
    fn replace_own_binders(&self, images: &[BinderImage], kept_names: Vec<Name>) -> Rule {
        let kept = kept_names.len();
        let body = Rule { binders: vec![], premises: self.premises.clone(), conclusion: self.conclusion.clone() };
        let r: Result<Rule, std::convert::Infallible> = body.map_terms(&mut |t, local| Ok(t.replace_binders(images, kept, local)));
        let mut r = match r {
            Ok(r) => r,
            Err(e) => match e {},
        };
        r.binders = kept_names;
        r
    }

    /// Substitutes the rule's binders (outermost first) with terms scoped in
    /// the ambient context.
    pub fn instantiate_with(&self, args: &[Term]) -> (Vec<Rule>, Term) {
        debug_assert_eq!(args.len(), self.binders.len());
        let images: Vec<_> = args.iter().cloned().map(BinderImage::Term).collect();
        let r = self.replace_own_binders(&images, vec![]);
        (r.premises, r.conclusion)
    }

    pub fn apply_subst(&self, subst: &Substitution, fuel: usize) -> Result<Rule, NormalizeError> {
        if subst.is_empty() {
            return Ok(self.clone());
        }
        self.map_terms(&mut |t, _| subst.apply_with(t, fuel))
    }

    pub fn normalize(&self, fuel: usize) -> Result<Rule, NormalizeError> {
        self.map_terms(&mut |t, _| t.normalize_with(fuel))
    }

    /// The rule binders (by position, outermost first) that occur in `premise`.
    fn binders_in_premise(&self, premise: usize) -> BTreeSet<usize> {
        let m = self.binders.len();
        self.premises[premise].free_bound().into_iter().filter(|i| *i < m).map(|i| m - 1 - i).collect()
    }
}

/// A fresh unification variable applied to the ambient variables listed in
/// `spine` (indices relative to the ambient context, in application order).
fn flex(fresh: &mut FreshIds, spine: &[usize]) -> (VarId, Term) {
    let id = fresh.fresh();
    let t = Term::apps(Term::UnifVar(id), spine.iter().map(|i| Term::Bound(*i)));
    (id, t)
}

/// Every ambient variable, outermost first.
fn full_spine(ambient: usize) -> Vec<usize> {
    (0..ambient).rev().collect()
}

/// Replaces every binder of `rule` with a fresh unification variable applied
/// to all `ambient` bound variables in scope.
pub fn instantiate(rule: &Rule, ambient: usize, fresh: &mut FreshIds) -> InstantiatedRule {
    let spine = full_spine(ambient);
    let (introduced, args): (Vec<_>, Vec<_>) = rule.binders.iter().map(|_| flex(fresh, &spine)).unzip();
    let (premises, conclusion) = rule.instantiate_with(&args);
    InstantiatedRule { premises, conclusion, introduced }
}

/// True if the conclusion is headed by a constant, so the rule does not
/// unify with arbitrary goals.
pub fn is_introduction_format(rule: &Rule) -> bool {
    matches!(rule.conclusion.head(), Term::Const(_))
}

/// First phase of instantiating an elimination rule.
///
/// Only the binders occurring in the first premise are instantiated; the rest
/// are kept as binders of [`PartialInstantiation::rule`] until
/// [`PartialInstantiation::finish`] runs.
#[derive(Clone, Debug)]
pub struct PartialInstantiation {
    pub rule: Rule,
    pub introduced: Vec<VarId>,
    ambient: usize,
}

pub fn instantiate_two_phase(rule: &Rule, ambient: usize, fresh: &mut FreshIds) -> PartialInstantiation {
    let in_first = if rule.premises.is_empty() { BTreeSet::new() } else { rule.binders_in_premise(0) };
    let spine = full_spine(ambient);
    let mut introduced = Vec::new();
    let mut kept_names = Vec::new();
    let images: Vec<_> = rule
        .binders
        .iter()
        .enumerate()
        .map(|(p, name)| {
            if in_first.contains(&p) {
                let (id, t) = flex(fresh, &spine);
                introduced.push(id);
                BinderImage::Term(t)
            } else {
                kept_names.push(name.clone());
                BinderImage::Keep(kept_names.len() - 1)
            }
        })
        .collect();
    let rule = rule.replace_own_binders(&images, kept_names);
    PartialInstantiation { rule, introduced, ambient }
}

impl PartialInstantiation {
    /// The instantiated first premise, scoped in the ambient context.
    pub fn first_premise(&self) -> Option<Rule> {
        let premise = self.rule.premises.first()?;
        let kept = self.rule.binders.len();
        // The first premise mentions no kept binder, so lowering cannot fail.
        premise.shift(-(kept as isize), 0).ok()
    }

    /// Ambient variables (indices relative to the ambient context) that occur
    /// free in an argument of some occurrence of the kept binder at `position`.
    fn argument_vars(rule: &Rule, position: usize) -> BTreeSet<usize> {
        let kept = rule.binders.len();
        let index = kept - 1 - position;
        let mut out = BTreeSet::new();
        let body = Rule { binders: vec![], premises: rule.premises.clone(), conclusion: rule.conclusion.clone() };
        body.for_each_term(&mut |t, local| collect_argument_vars(t, local, index, kept, &mut out));
        out
    }

    /// Applies the substitution obtained from the first premise and
    /// instantiates the remaining binders.
    ///
    /// A remaining binder's unification variable is applied only to the
    /// ambient variables that do not already reach it as an argument; this
    /// keeps the conclusion inside the pattern fragment when the first premise
    /// has fixed those arguments to ambient variables.
    pub fn finish(self, subst: &Substitution, fresh: &mut FreshIds, fuel: usize) -> Result<InstantiatedRule, NormalizeError> {
        let rule = self.rule.apply_subst(subst, fuel)?;
        let mut introduced = self.introduced;
        let args: Vec<Term> = (0..rule.binders.len())
            .map(|p| {
                let blocked = Self::argument_vars(&rule, p);
                let spine: Vec<usize> = full_spine(self.ambient).into_iter().filter(|i| !blocked.contains(i)).collect();
                let (id, t) = flex(fresh, &spine);
                introduced.push(id);
                t
            })
            .collect();
        let (premises, conclusion) = rule.instantiate_with(&args);
        Ok(InstantiatedRule { premises, conclusion, introduced })
    }
}

fn collect_argument_vars(t: &Term, local: usize, index: usize, kept: usize, out: &mut BTreeSet<usize>) {
    let (head, args) = t.spine();
    if matches!(head, Term::Bound(i) if *i == index + local) {
        for a in &args {
            out.extend(a.free_bound().into_iter().filter(|i| *i >= local + kept).map(|i| i - local - kept));
        }
    }
    match t {
        Term::App(f, a) => {
            collect_argument_vars(f, local, index, kept, out);
            collect_argument_vars(a, local, index, kept, out);
        }
        Term::Lam(_, b) => collect_argument_vars(b, local + 1, index, kept, out),
        _ => {}
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleKind::Axiom => "axiom",
            RuleKind::Theorem => "theorem",
            RuleKind::Intro => "intro",
            RuleKind::DerivedCases => "derived-cases",
            RuleKind::DerivedInduction => "derived-induction",
            RuleKind::BuiltinRefl => "builtin-refl",
        };
        f.write_str(s)
    }
}
